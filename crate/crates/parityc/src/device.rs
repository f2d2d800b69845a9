//! Device connectivity model and Steiner-tree computation.
//!
//! Trees for 3 and 4 terminals on coordinate grids use the rectilinear
//! constructions (median hub, central rectangle); small terminal sets can be
//! solved exactly with a Dreyfus–Wagner search; everything else falls back
//! to the metric-closure MST approximation with leaf pruning, which is
//! within a factor 2 of optimal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Connectivity graph of the device. Nodes may carry planar integer
/// coordinates (used by the rectilinear fast paths); obstacles are simply
/// missing nodes or edges.
#[derive(Debug, Clone)]
pub struct DeviceGraph {
    ids: Vec<usize>,
    index: BTreeMap<usize, usize>,
    coords: BTreeMap<usize, (i64, i64)>,
    by_coord: BTreeMap<(i64, i64), usize>,
    adj: BTreeMap<usize, BTreeSet<usize>>,
    dist: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceNodeSpec {
    id: usize,
    #[serde(default)]
    x: Option<i64>,
    #[serde(default)]
    y: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceSpec {
    nodes: Vec<DeviceNodeSpec>,
    edges: Vec<(usize, usize)>,
}

impl DeviceGraph {
    pub fn new(
        nodes: Vec<(usize, Option<(i64, i64)>)>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mut ids: Vec<usize> = nodes.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != nodes.len() {
            return Err(Error::Input("duplicate node ids in device".into()));
        }
        let index: BTreeMap<usize, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut coords = BTreeMap::new();
        let mut by_coord = BTreeMap::new();
        for (id, c) in &nodes {
            if let Some(c) = c {
                coords.insert(*id, *c);
                if by_coord.insert(*c, *id).is_some() {
                    return Err(Error::Input(format!("duplicate coordinate {c:?}")));
                }
            }
        }
        let mut adj: BTreeMap<usize, BTreeSet<usize>> =
            ids.iter().map(|&id| (id, BTreeSet::new())).collect();
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::Input(format!("self-loop on node {a}")));
            }
            if !index.contains_key(&a) || !index.contains_key(&b) {
                return Err(Error::Input(format!(
                    "edge ({a},{b}) references unknown node"
                )));
            }
            adj.get_mut(&a).unwrap().insert(b);
            adj.get_mut(&b).unwrap().insert(a);
        }
        let mut g = DeviceGraph {
            ids,
            index,
            coords,
            by_coord,
            adj,
            dist: Vec::new(),
        };
        g.dist = g.all_pairs();
        if !g.is_connected() {
            return Err(Error::Input("device graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DeviceSpec =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("device file: {e}")))?;
        let nodes = spec
            .nodes
            .into_iter()
            .map(|n| {
                let c = match (n.x, n.y) {
                    (Some(x), Some(y)) => Some((x, y)),
                    (None, None) => None,
                    _ => None,
                };
                (n.id, c)
            })
            .collect();
        Self::new(nodes, spec.edges)
    }

    /// Linear chain of `n` nodes with coordinates (i, 0).
    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("chain requires at least one node".into()));
        }
        let nodes = (0..n).map(|i| (i, Some((i as i64, 0)))).collect();
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(nodes, edges)
    }

    /// w×h grid with node id y*w + x at coordinate (x, y).
    pub fn grid(w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Input("grid dimensions must be positive".into()));
        }
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let id = y * w + x;
                nodes.push((id, Some((x as i64, y as i64))));
                if x + 1 < w {
                    edges.push((id, id + 1));
                }
                if y + 1 < h {
                    edges.push((id, id + w));
                }
            }
        }
        Self::new(nodes, edges)
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn has_node(&self, id: usize) -> bool {
        self.index.contains_key(&id)
    }

    pub fn coord(&self, id: usize) -> Option<(i64, i64)> {
        self.coords.get(&id).copied()
    }

    pub fn node_at(&self, c: (i64, i64)) -> Option<usize> {
        self.by_coord.get(&c).copied()
    }

    pub fn neighbors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[&id].iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    fn all_pairs(&self) -> Vec<Vec<u32>> {
        let n = self.ids.len();
        let mut dist = vec![vec![u32::MAX; n]; n];
        for (start, row) in dist.iter_mut().enumerate() {
            row[start] = 0;
            let mut queue = VecDeque::from([self.ids[start]]);
            while let Some(v) = queue.pop_front() {
                let dv = row[self.index[&v]];
                for w in self.adj[&v].iter() {
                    let wi = self.index[w];
                    if row[wi] == u32::MAX {
                        row[wi] = dv + 1;
                        queue.push_back(*w);
                    }
                }
            }
        }
        dist
    }

    fn is_connected(&self) -> bool {
        self.dist
            .first()
            .is_none_or(|row| row.iter().all(|&d| d != u32::MAX))
    }

    /// Shortest-path edge count between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.dist[self.index[&a]][self.index[&b]] as usize
    }

    /// One shortest path from `a` to `b`, deterministic: at every step the
    /// smallest-id neighbor closer to `b` is taken.
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let next = self
                .neighbors(cur)
                .filter(|&n| self.distance(n, b) + 1 == self.distance(cur, b))
                .min()
                .expect("graph is connected");
            path.push(next);
            cur = next;
        }
        path
    }
}

/// Injective assignment of parity qubits to device nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    place: BTreeMap<usize, usize>,
    #[serde(skip)]
    occupied: BTreeMap<usize, usize>,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut l = Layout::new();
        for (q, n) in pairs {
            l.assign(q, n)?;
        }
        Ok(l)
    }

    pub fn assign(&mut self, qubit: usize, node: usize) -> Result<()> {
        if self.occupied.contains_key(&node) {
            return Err(Error::Infeasible(format!("node {node} already occupied")));
        }
        if self.place.contains_key(&qubit) {
            return Err(Error::Infeasible(format!("qubit {qubit} already placed")));
        }
        self.place.insert(qubit, node);
        self.occupied.insert(node, qubit);
        Ok(())
    }

    pub fn node_of(&self, qubit: usize) -> Option<usize> {
        self.place.get(&qubit).copied()
    }

    pub fn qubit_at(&self, node: usize) -> Option<usize> {
        self.occupied.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.place.len()
    }

    pub fn is_empty(&self) -> bool {
        self.place.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.place.iter().map(|(&q, &n)| (q, n))
    }

    pub fn swap_qubits(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let na = self.place[&a];
        let nb = self.place[&b];
        self.place.insert(a, nb);
        self.place.insert(b, na);
        self.occupied.insert(na, b);
        self.occupied.insert(nb, a);
    }

    pub fn relocate(&mut self, qubit: usize, node: usize) -> Result<()> {
        if self.occupied.contains_key(&node) {
            return Err(Error::MoveRejected(format!("node {node} occupied")));
        }
        let old = self
            .place
            .get(&qubit)
            .copied()
            .ok_or(Error::UnknownId(qubit))?;
        self.occupied.remove(&old);
        self.place.insert(qubit, node);
        self.occupied.insert(node, qubit);
        Ok(())
    }

    /// Rebuilds the reverse map; needed after deserialization.
    pub fn rebuild_index(&mut self) -> Result<()> {
        self.occupied.clear();
        for (&q, &n) in &self.place {
            if self.occupied.insert(n, q).is_some() {
                return Err(Error::Input(format!("layout maps two qubits to node {n}")));
            }
        }
        Ok(())
    }
}

fn norm_edge(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Tree of device edges spanning a set of terminal nodes, possibly through
/// non-terminal nodes. Every leaf is a terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteinerTree {
    pub terminals: BTreeSet<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl SteinerTree {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> BTreeSet<usize> {
        let mut nodes: BTreeSet<usize> = self.terminals.clone();
        for &(a, b) in &self.edges {
            nodes.insert(a);
            nodes.insert(b);
        }
        nodes
    }

    pub fn adjacency(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = self
            .nodes()
            .into_iter()
            .map(|n| (n, BTreeSet::new()))
            .collect();
        for &(a, b) in &self.edges {
            adj.get_mut(&a).unwrap().insert(b);
            adj.get_mut(&b).unwrap().insert(a);
        }
        adj
    }

    /// Structural invariants: connected, acyclic, terminals covered, every
    /// leaf a terminal.
    pub fn validate(&self, device: &DeviceGraph) -> Result<()> {
        let nodes = self.nodes();
        for &(a, b) in &self.edges {
            if !device.has_edge(a, b) {
                return Err(Error::Verification(format!(
                    "tree edge ({a},{b}) not on device"
                )));
            }
        }
        if self.edges.len() + 1 != nodes.len() && !(self.edges.is_empty() && nodes.len() <= 1) {
            return Err(Error::Verification("tree edge count != nodes - 1".into()));
        }
        let adj = self.adjacency();
        if let Some(&start) = nodes.iter().next() {
            let mut seen = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[&v] {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
            if seen.len() != nodes.len() {
                return Err(Error::Verification("tree is disconnected".into()));
            }
        }
        for (n, nbrs) in &adj {
            if nbrs.len() <= 1 && !self.terminals.contains(n) && nodes.len() > 1 {
                return Err(Error::Verification(format!("non-terminal leaf {n}")));
            }
        }
        if !self.terminals.iter().all(|t| nodes.contains(t)) {
            return Err(Error::Verification("terminal missing from tree".into()));
        }
        Ok(())
    }

    /// Longest tree-path distance between two terminals.
    pub fn terminal_diameter(&self) -> usize {
        let adj = self.adjacency();
        let mut best = 0;
        for &t in &self.terminals {
            let mut d: BTreeMap<usize, usize> = BTreeMap::from([(t, 0)]);
            let mut queue = VecDeque::from([t]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[&v] {
                    if !d.contains_key(&w) {
                        d.insert(w, d[&v] + 1);
                        queue.push_back(w);
                    }
                }
            }
            for &u in &self.terminals {
                best = best.max(*d.get(&u).unwrap_or(&0));
            }
        }
        best
    }
}

/// Extracts a tree from a connected edge set: spanning tree by BFS from the
/// smallest terminal (smallest-id neighbors first), then non-terminal leaves
/// pruned until only terminal leaves remain.
fn tree_from_edges(
    terminals: &BTreeSet<usize>,
    edges: &BTreeSet<(usize, usize)>,
) -> Result<SteinerTree> {
    if terminals.len() <= 1 {
        return Ok(SteinerTree {
            terminals: terminals.clone(),
            edges: BTreeSet::new(),
        });
    }
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    let start = *terminals.iter().next().unwrap();
    let mut tree_edges = BTreeSet::new();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                tree_edges.insert(norm_edge(v, w));
                queue.push_back(w);
            }
        }
    }
    if !terminals.iter().all(|t| seen.contains(t)) {
        return Err(Error::Verification(
            "edge set does not connect terminals".into(),
        ));
    }
    // Prune non-terminal leaves.
    loop {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &tree_edges {
            *degree.entry(a).or_insert(0) += 1;
            *degree.entry(b).or_insert(0) += 1;
        }
        let removable: Vec<(usize, usize)> = tree_edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                (degree[&a] == 1 && !terminals.contains(&a))
                    || (degree[&b] == 1 && !terminals.contains(&b))
            })
            .collect();
        if removable.is_empty() {
            break;
        }
        for e in removable {
            tree_edges.remove(&e);
        }
    }
    Ok(SteinerTree {
        terminals: terminals.clone(),
        edges: tree_edges,
    })
}

/// Unit-step L-shaped route between two coordinates. Returns the device
/// edges, or None when a node or link on the route is missing.
fn l_route(
    device: &DeviceGraph,
    from: (i64, i64),
    to: (i64, i64),
    x_first: bool,
) -> Option<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    let mut cur = from;
    let mut advance = |cur: (i64, i64), dx: i64, dy: i64| -> Option<(i64, i64)> {
        let next = (cur.0 + dx, cur.1 + dy);
        let a = device.node_at(cur)?;
        let b = device.node_at(next)?;
        if !device.has_edge(a, b) {
            return None;
        }
        edges.push(norm_edge(a, b));
        Some(next)
    };
    let (first_x, then_x) = (x_first, !x_first);
    for phase in 0..2 {
        let do_x = (phase == 0 && first_x) || (phase == 1 && then_x);
        if do_x {
            while cur.0 != to.0 {
                cur = advance(cur, (to.0 - cur.0).signum(), 0)?;
            }
        } else {
            while cur.1 != to.1 {
                cur = advance(cur, 0, (to.1 - cur.1).signum())?;
            }
        }
    }
    Some(edges)
}

fn sorted_coords(cs: &[(i64, i64)]) -> (Vec<i64>, Vec<i64>) {
    let mut xs: Vec<i64> = cs.iter().map(|c| c.0).collect();
    let mut ys: Vec<i64> = cs.iter().map(|c| c.1).collect();
    xs.sort_unstable();
    ys.sort_unstable();
    (xs, ys)
}

/// Size of the minimal rectilinear tree for 3 terminals: the coordinate
/// spans after sorting x and y independently.
pub fn rect3_size(coords: &[(i64, i64); 3]) -> u64 {
    let (xs, ys) = sorted_coords(coords);
    ((xs[2] - xs[0]) + (ys[2] - ys[0])) as u64
}

/// Upper bound on the minimal rectilinear tree for 4 terminals: both spans
/// plus the shorter side of the central rectangle, which can count twice.
pub fn rect4_size_bound(coords: &[(i64, i64); 4]) -> u64 {
    let (xs, ys) = sorted_coords(coords);
    ((xs[3] - xs[0]) + (ys[3] - ys[0]) + (ys[2] - ys[1]).min(xs[2] - xs[1])) as u64
}

/// Rectilinear 3-terminal construction: route every terminal to the median
/// hub (x₂, y₂). Returns None when the grid route is obstructed.
pub fn rect_steiner_3(device: &DeviceGraph, terminals: &[usize; 3]) -> Option<SteinerTree> {
    let coords: Vec<(i64, i64)> = terminals
        .iter()
        .map(|&t| device.coord(t))
        .collect::<Option<_>>()?;
    let (xs, ys) = sorted_coords(&coords);
    let hub = (xs[1], ys[1]);
    let mut edges = BTreeSet::new();
    for &c in &coords {
        for e in l_route(device, c, hub, true)? {
            edges.insert(e);
        }
    }
    let terminals: BTreeSet<usize> = terminals.iter().copied().collect();
    let tree = tree_from_edges(&terminals, &edges).ok()?;
    tree.validate(device).ok()?;
    Some(tree)
}

/// Rectilinear 4-terminal construction via the central rectangle spanned by
/// the two middle x and y coordinates: each terminal attaches to its nearest
/// rectangle corner, then the used corners are joined along the rectangle
/// sides (one run on the longer side, two on the shorter one when all four
/// corners are in use). Candidate tie-breaks (corner choice, route kink,
/// side choice) are enumerated and the smallest tree kept.
pub fn rect_steiner_4(device: &DeviceGraph, terminals: &[usize; 4]) -> Option<SteinerTree> {
    let coords: Vec<(i64, i64)> = terminals
        .iter()
        .map(|&t| device.coord(t))
        .collect::<Option<_>>()?;
    let (xs, ys) = sorted_coords(&coords);
    let (bl, br) = ((xs[1], ys[1]), (xs[2], ys[1]));
    let (tl, tr) = ((xs[1], ys[2]), (xs[2], ys[2]));
    let corners = [bl, br, tl, tr];
    let width = xs[2] - xs[1];
    let height = ys[2] - ys[1];

    let manhattan = |a: (i64, i64), b: (i64, i64)| (a.0 - b.0).abs() + (a.1 - b.1).abs();

    // Nearest corners (with ties) per terminal.
    let nearest: Vec<Vec<(i64, i64)>> = coords
        .iter()
        .map(|&c| {
            let dmin = corners.iter().map(|&k| manhattan(c, k)).min().unwrap();
            corners
                .iter()
                .copied()
                .filter(|&k| manhattan(c, k) == dmin)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();

    type SideRun = ((i64, i64), (i64, i64));
    let side_runs = |used: &BTreeSet<(i64, i64)>| -> Vec<Vec<SideRun>> {
        let bottom = (bl, br);
        let top = (tl, tr);
        let left = (bl, tl);
        let right = (br, tr);
        match used.len() {
            0 | 1 => vec![vec![]],
            2 => {
                let v: Vec<(i64, i64)> = used.iter().copied().collect();
                let (a, b) = (v[0], v[1]);
                if a.0 == b.0 || a.1 == b.1 {
                    // Adjacent corners: the shared side.
                    vec![vec![(a, b)]]
                } else {
                    // Diagonal: connect through either shared corner.
                    let via1 = (a.0, b.1);
                    let via2 = (b.0, a.1);
                    vec![vec![(a, via1), (via1, b)], vec![(a, via2), (via2, b)]]
                }
            }
            3 => {
                let missing = corners
                    .iter()
                    .copied()
                    .collect::<BTreeSet<_>>()
                    .difference(used)
                    .copied()
                    .next();
                match missing {
                    // The two sides avoiding the missing corner form the L.
                    Some(m) => {
                        let runs: Vec<_> = [bottom, top, left, right]
                            .into_iter()
                            .filter(|&(a, b)| a != m && b != m)
                            .collect();
                        vec![runs]
                    }
                    // Degenerate rectangle: corners coincide, nothing extra.
                    None => vec![vec![]],
                }
            }
            _ => {
                if width >= height {
                    vec![vec![bottom, left, right], vec![top, left, right]]
                } else {
                    vec![vec![left, bottom, top], vec![right, bottom, top]]
                }
            }
        }
    };

    let terminal_set: BTreeSet<usize> = terminals.iter().copied().collect();
    let mut best: Option<SteinerTree> = None;
    let mut consider = |tree: SteinerTree| {
        let better = match &best {
            None => true,
            Some(b) => {
                (tree.size(), tree.terminal_diameter(), tree.edges.clone())
                    < (b.size(), b.terminal_diameter(), b.edges.clone())
            }
        };
        if better {
            best = Some(tree);
        }
    };

    // Corner-assignment choices × route kinks × side choices.
    let mut assign_idx = [0usize; 4];
    loop {
        let assigned: Vec<(i64, i64)> = (0..4).map(|i| nearest[i][assign_idx[i]]).collect();
        let used: BTreeSet<(i64, i64)> = assigned.iter().copied().collect();
        for kink_mask in 0u32..16 {
            let mut attach = BTreeSet::new();
            let mut ok = true;
            for i in 0..4 {
                let x_first = (kink_mask >> i) & 1 == 0;
                match l_route(device, coords[i], assigned[i], x_first) {
                    Some(es) => attach.extend(es),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            for runs in side_runs(&used) {
                let mut edges = attach.clone();
                let mut ok = true;
                for (a, b) in &runs {
                    match l_route(device, *a, *b, true) {
                        Some(es) => edges.extend(es),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if let Ok(tree) = tree_from_edges(&terminal_set, &edges) {
                    if tree.validate(device).is_ok() {
                        consider(tree);
                    }
                }
            }
        }
        // Next corner-assignment combination.
        let mut i = 0;
        loop {
            if i == 4 {
                return best;
            }
            assign_idx[i] += 1;
            if assign_idx[i] < nearest[i].len() {
                break;
            }
            assign_idx[i] = 0;
            i += 1;
        }
    }
}

/// Metric-closure MST approximation (KMB style) with leaf pruning.
/// Deterministic: Prim runs from every terminal and the best tree is kept
/// (size, then terminal diameter, then lexicographic edges).
pub fn general_steiner(device: &DeviceGraph, terminals: &BTreeSet<usize>) -> Result<SteinerTree> {
    for &t in terminals {
        if !device.has_node(t) {
            return Err(Error::UnknownId(t));
        }
    }
    if terminals.len() <= 1 {
        return Ok(SteinerTree {
            terminals: terminals.clone(),
            edges: BTreeSet::new(),
        });
    }
    let ts: Vec<usize> = terminals.iter().copied().collect();
    let mut best: Option<SteinerTree> = None;
    for &start in &ts {
        // Prim over the metric closure.
        let mut in_tree = BTreeSet::from([start]);
        let mut mst_edges: Vec<(usize, usize)> = Vec::new();
        while in_tree.len() < ts.len() {
            let mut pick: Option<(usize, usize, usize)> = None; // (dist, from, to)
            for &u in &in_tree {
                for &v in &ts {
                    if in_tree.contains(&v) {
                        continue;
                    }
                    let d = device.distance(u, v);
                    let cand = (d, u, v);
                    if pick.is_none_or(|p| cand < p) {
                        pick = Some(cand);
                    }
                }
            }
            let (_, u, v) = pick.expect("terminals remain");
            mst_edges.push((u, v));
            in_tree.insert(v);
        }
        let mut edges = BTreeSet::new();
        for (u, v) in mst_edges {
            let path = device.shortest_path(u, v);
            for w in path.windows(2) {
                edges.insert(norm_edge(w[0], w[1]));
            }
        }
        let tree = tree_from_edges(terminals, &edges)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (tree.size(), tree.terminal_diameter(), tree.edges.clone())
                    < (b.size(), b.terminal_diameter(), b.edges.clone())
            }
        };
        if better {
            best = Some(tree);
        }
    }
    let tree = best.expect("at least one start");
    tree.validate(device)?;
    Ok(tree)
}

/// Exact minimal Steiner tree by Dreyfus–Wagner dynamic programming.
/// Exponential in the terminal count; capped at 8 terminals.
pub fn exact_steiner(device: &DeviceGraph, terminals: &BTreeSet<usize>) -> Result<SteinerTree> {
    if terminals.len() > 8 {
        return Err(Error::ResourceCap(format!(
            "exact Steiner search capped at 8 terminals, got {}",
            terminals.len()
        )));
    }
    for &t in terminals {
        if !device.has_node(t) {
            return Err(Error::UnknownId(t));
        }
    }
    if terminals.len() <= 1 {
        return Ok(SteinerTree {
            terminals: terminals.clone(),
            edges: BTreeSet::new(),
        });
    }
    let ids = device.node_ids();
    let n = ids.len();
    let idx: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let dist = |a: usize, b: usize| device.distance(ids[a], ids[b]) as u64;

    let ts: Vec<usize> = terminals.iter().copied().collect();
    let root = idx[&ts[0]];
    let rest: Vec<usize> = ts[1..].iter().map(|t| idx[t]).collect();
    let k = rest.len();
    let full: usize = (1 << k) - 1;

    const INF: u64 = u64::MAX / 4;
    // dp[s][v] = weight of an optimal tree connecting {rest[i] : i ∈ s} ∪ {v}.
    let mut dp = vec![vec![INF; n]; full + 1];
    // Choice for reconstruction: either a pure path from the singleton
    // terminal, or (branch node u, submask e) with a split at u.
    let mut choice = vec![vec![(usize::MAX, 0usize); n]; full + 1];
    for (i, &t) in rest.iter().enumerate() {
        for (v, slot) in dp[1 << i].iter_mut().enumerate() {
            *slot = dist(t, v);
        }
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let mut merged = vec![INF; n];
        let mut merged_e = vec![0usize; n];
        for u in 0..n {
            // Split submask enumeration, fixing the lowest bit on one side.
            let mut e = (s - 1) & s;
            while e != 0 {
                if e & low != 0 {
                    let w = dp[e][u].saturating_add(dp[s ^ e][u]);
                    if w < merged[u] {
                        merged[u] = w;
                        merged_e[u] = e;
                    }
                }
                e = (e - 1) & s;
            }
        }
        for v in 0..n {
            for u in 0..n {
                let w = merged[u].saturating_add(dist(u, v));
                if w < dp[s][v] {
                    dp[s][v] = w;
                    choice[s][v] = (u, merged_e[u]);
                }
            }
        }
    }

    // Reconstruct edges.
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let add_path = |edges: &mut BTreeSet<(usize, usize)>, a: usize, b: usize| {
        let path = device.shortest_path(ids[a], ids[b]);
        for w in path.windows(2) {
            edges.insert(norm_edge(w[0], w[1]));
        }
    };
    let mut stack = vec![(full, root)];
    while let Some((s, v)) = stack.pop() {
        if s.count_ones() == 1 {
            let t = rest[s.trailing_zeros() as usize];
            add_path(&mut edges, t, v);
            continue;
        }
        let (u, e) = choice[s][v];
        add_path(&mut edges, u, v);
        stack.push((e, u));
        stack.push((s ^ e, u));
    }
    let tree = tree_from_edges(terminals, &edges)?;
    tree.validate(device)?;
    debug_assert_eq!(tree.size() as u64, dp[full][root]);
    Ok(tree)
}

/// Exact minimal rectilinear Steiner size over the Hanan grid of the given
/// terminals (obstacle-free plane). Independent of any device graph; used
/// as the optimality oracle for the 3/4-terminal constructions.
pub fn hanan_exact_size(coords: &[(i64, i64)]) -> u64 {
    let mut xs: Vec<i64> = coords.iter().map(|c| c.0).collect();
    let mut ys: Vec<i64> = coords.iter().map(|c| c.1).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let nx = xs.len();
    let ny = ys.len();
    let n = nx * ny;
    let at = |xi: usize, yi: usize| yi * nx + xi;

    // Weighted all-pairs over the Hanan grid: rectilinear distance, since the
    // grid is complete in both axes.
    let pos = |v: usize| (xs[v % nx], ys[v / nx]);
    let dist = |a: usize, b: usize| -> u64 {
        let (pa, pb) = (pos(a), pos(b));
        ((pa.0 - pb.0).abs() + (pa.1 - pb.1).abs()) as u64
    };

    let term_idx: Vec<usize> = coords
        .iter()
        .map(|&(x, y)| at(xs.binary_search(&x).unwrap(), ys.binary_search(&y).unwrap()))
        .collect();
    let mut uniq = term_idx.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() <= 1 {
        return 0;
    }
    let root = uniq[0];
    let rest = &uniq[1..];
    let k = rest.len();
    let full: usize = (1 << k) - 1;
    const INF: u64 = u64::MAX / 4;
    let mut dp = vec![vec![INF; n]; full + 1];
    for (i, &t) in rest.iter().enumerate() {
        for (v, slot) in dp[1 << i].iter_mut().enumerate() {
            *slot = dist(t, v);
        }
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let mut merged = vec![INF; n];
        for u in 0..n {
            let mut e = (s - 1) & s;
            while e != 0 {
                if e & low != 0 {
                    merged[u] = merged[u].min(dp[e][u].saturating_add(dp[s ^ e][u]));
                }
                e = (e - 1) & s;
            }
        }
        for (v, slot) in dp[s].iter_mut().enumerate() {
            for (u, m) in merged.iter().enumerate() {
                let w = m.saturating_add(dist(u, v));
                if w < *slot {
                    *slot = w;
                }
            }
        }
    }
    dp[full][root]
}

/// Computes a Steiner tree for a terminal set: rectilinear fast paths for 3
/// and 4 coordinated terminals (falling back on obstruction), shortest path
/// for 2, metric-closure MST otherwise.
pub fn steiner_tree(device: &DeviceGraph, terminals: &BTreeSet<usize>) -> Result<SteinerTree> {
    let ts: Vec<usize> = terminals.iter().copied().collect();
    match ts.len() {
        0 => Err(Error::Input(
            "steiner tree needs at least one terminal".into(),
        )),
        1 | 2 => general_steiner(device, terminals),
        3 => {
            let arr = [ts[0], ts[1], ts[2]];
            match rect_steiner_3(device, &arr) {
                Some(t) => Ok(t),
                None => general_steiner(device, terminals),
            }
        }
        4 => {
            let arr = [ts[0], ts[1], ts[2], ts[3]];
            match rect_steiner_4(device, &arr) {
                Some(t) => Ok(t),
                None => general_steiner(device, terminals),
            }
        }
        _ => general_steiner(device, terminals),
    }
}
