//! CNOT + rotation synthesis for constraint operators exp(iα·∏σz) over a
//! Steiner tree.
//!
//! Local constraints: collect parities along the tree into a root with a
//! CNOT fan-in (child controls, parent targets), rotate, undo in reverse.
//!
//! Non-local constraints: run the same sequence over the *full* tree and
//! bridge every non-constraint node by duplicating its value onto one child
//! with one extra CNOT before and after — each bridged qubit then enters the
//! collected parity twice and cancels. Duplications are emitted deepest
//! first so no value is copied more than once, and ahead of the fan-in so
//! the ASAP schedule overlaps them with the tree sequence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::circuit::{Circuit, Gate};
use crate::device::{DeviceGraph, SteinerTree};
use crate::error::{Error, Result};

/// Tree rooted for synthesis. Children keep BFS discovery order; the gate
/// ordering that matters for depth happens in `order_pre_sequence`.
struct RootedTree {
    root: usize,
    children: BTreeMap<usize, Vec<usize>>,
    depth: BTreeMap<usize, usize>,
    height: BTreeMap<usize, usize>,
}

fn rooted(tree: &SteinerTree, root: usize) -> RootedTree {
    let adj = tree.adjacency();
    let mut parent = BTreeMap::new();
    let mut children: BTreeMap<usize, Vec<usize>> = adj.keys().map(|&n| (n, Vec::new())).collect();
    let mut depth = BTreeMap::from([(root, 0usize)]);
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[&v] {
            if w != root && !parent.contains_key(&w) {
                parent.insert(w, v);
                depth.insert(w, depth[&v] + 1);
                children.get_mut(&v).unwrap().push(w);
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let mut height: BTreeMap<usize, usize> = adj.keys().map(|&n| (n, 0)).collect();
    for &v in order.iter().rev() {
        let h = children[&v]
            .iter()
            .map(|c| height[c] + 1)
            .max()
            .unwrap_or(0);
        height.insert(v, h);
    }
    RootedTree {
        root,
        children,
        depth,
        height,
    }
}

/// Orders the pre-rotation CNOTs (duplications + fan-in edges) for minimal
/// depth by greedy list scheduling over their precedence DAG:
///
///   1. a node's duplication fires before any gate that modifies the node
///      (fan-in edges into it, its parent's duplication onto it), so every
///      duplication copies an original value;
///   2. a fan-in edge (v → parent) fires after every gate injecting into v,
///      so the collected parity is complete when it moves up.
///
/// Within a time step, qubit-disjoint gates are picked by longest remaining
/// critical path, duplications first on ties. The returned order reproduces
/// the computed depth under ASAP scheduling.
fn order_pre_sequence(
    duplications: &[(usize, usize)],
    fans: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    let n_dup = duplications.len();
    let gates: Vec<(usize, usize)> = duplications.iter().chain(fans).copied().collect();
    let n = gates.len();
    let dup_of_control: BTreeMap<usize, usize> = duplications
        .iter()
        .enumerate()
        .map(|(i, &(c, _))| (c, i))
        .collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, &(_, target)) in gates.iter().enumerate() {
        if let Some(&d) = dup_of_control.get(&target) {
            if d != g {
                preds[g].push(d);
            }
        }
    }
    for (f, &(source, _)) in gates.iter().enumerate().skip(n_dup) {
        for (h, &(_, target)) in gates.iter().enumerate() {
            if h != f && target == source {
                preds[f].push(h);
            }
        }
    }
    // Longest path to a sink, by reverse topological relaxation.
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, ps) in preds.iter().enumerate() {
        for &p in ps {
            succs[p].push(g);
        }
    }
    let mut crit = vec![0usize; n];
    let mut changed = true;
    while changed {
        changed = false;
        for g in 0..n {
            let want = succs[g].iter().map(|&s| crit[s] + 1).max().unwrap_or(0);
            if want > crit[g] {
                crit[g] = want;
                changed = true;
            }
        }
    }
    let mut priority: Vec<usize> = (0..n).collect();
    priority.sort_by_key(|&g| (std::cmp::Reverse(crit[g]), g >= n_dup, g));

    let mut step_of: Vec<Option<usize>> = vec![None; n];
    let mut placed = 0;
    let mut time = 0;
    while placed < n {
        time += 1;
        let mut busy: BTreeSet<usize> = BTreeSet::new();
        for &g in &priority {
            if step_of[g].is_some() {
                continue;
            }
            let ready = preds[g]
                .iter()
                .all(|&p| step_of[p].is_some_and(|s| s < time));
            let (a, b) = gates[g];
            if ready && !busy.contains(&a) && !busy.contains(&b) {
                step_of[g] = Some(time);
                busy.insert(a);
                busy.insert(b);
                placed += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&g| (step_of[g], g >= n_dup, g));
    order.into_iter().map(|g| gates[g]).collect()
}

/// Eccentricity of every node within the tree.
fn tree_eccentricities(tree: &SteinerTree) -> BTreeMap<usize, usize> {
    let adj = tree.adjacency();
    let mut out = BTreeMap::new();
    for &start in adj.keys() {
        let mut dist = BTreeMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        let mut worst = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[&v] {
                if !dist.contains_key(&w) {
                    dist.insert(w, dist[&v] + 1);
                    worst = worst.max(dist[&v] + 1);
                    queue.push_back(w);
                }
            }
        }
        out.insert(start, worst);
    }
    out
}

/// Constraint node minimizing tree eccentricity; ties broken by smallest id.
pub fn choose_root(tree: &SteinerTree, constraint: &BTreeSet<usize>) -> Result<usize> {
    let nodes = tree.nodes();
    if !constraint.is_subset(&nodes) {
        return Err(Error::Input("constraint node missing from tree".into()));
    }
    let ecc = tree_eccentricities(tree);
    constraint
        .iter()
        .copied()
        .min_by_key(|n| (ecc[n], *n))
        .ok_or_else(|| Error::Input("empty constraint".into()))
}

/// Tree node minimizing eccentricity over all nodes (used as rotation site
/// for bridged synthesis, where the root need not be a constraint qubit).
fn tree_center(tree: &SteinerTree) -> usize {
    let ecc = tree_eccentricities(tree);
    ecc.iter()
        .map(|(&n, &e)| (e, n))
        .min()
        .map(|(_, n)| n)
        .expect("tree has nodes")
}

/// Pre-rotation fan-in: every subtree collapses onto its parent, child
/// controls, parent targets. Arms are listed sequentially; the ASAP
/// scheduler parallelizes disjoint arms.
fn fan_in_sequence(rt: &RootedTree) -> Vec<(usize, usize)> {
    fn walk(rt: &RootedTree, v: usize, out: &mut Vec<(usize, usize)>) {
        for &c in &rt.children[&v] {
            walk(rt, c, out);
            out.push((c, v));
        }
    }
    let mut out = Vec::new();
    walk(rt, rt.root, &mut out);
    out
}

/// Fan-in, rotation at the root, mirrored fan-out (same directions,
/// opposite order).
fn sandwich(pre: &[(usize, usize)], root: usize, angle: f64) -> Circuit {
    let mut c = Circuit::new();
    for &(control, target) in pre {
        c.push(Gate::Cnot { control, target });
    }
    // exp(iα·∏σz) carries phase e^{+iα} on even parity: RZ(−2α) on the
    // accumulated root reproduces it exactly, with no global phase.
    c.push(Gate::Rz {
        qubit: root,
        angle: -2.0 * angle,
    });
    for &(control, target) in pre.iter().rev() {
        c.push(Gate::Cnot { control, target });
    }
    c
}

/// Synthesizes exp(iα·∏σz) for a local constraint: every tree node is a
/// constraint qubit. Uses 2(|T|−1) CNOTs.
pub fn synth_local(tree: &SteinerTree, root: usize, angle: f64) -> Result<Circuit> {
    let nodes = tree.nodes();
    if !nodes.contains(&root) {
        return Err(Error::Input(format!("root {root} not in tree")));
    }
    if tree.terminals != nodes {
        return Err(Error::Input(
            "local synthesis requires every tree node in the constraint".into(),
        ));
    }
    let rt = rooted(tree, root);
    let pre = order_pre_sequence(&[], &fan_in_sequence(&rt));
    Ok(sandwich(&pre, root, angle))
}

/// Synthesizes exp(iα·∏_{m∈C}σz) over a tree that may contain
/// non-constraint nodes, bridging each of them with one duplication CNOT
/// onto a child per side. Uses 4|T| − 2|C| − 2 CNOTs.
pub fn synth_bridged(
    tree: &SteinerTree,
    constraint: &BTreeSet<usize>,
    angle: f64,
) -> Result<Circuit> {
    let nodes = tree.nodes();
    if !constraint.is_subset(&nodes) {
        return Err(Error::Input("constraint node missing from tree".into()));
    }
    if constraint.is_empty() {
        return Err(Error::Input("empty constraint".into()));
    }
    if nodes.len() == 1 {
        let q = *nodes.iter().next().unwrap();
        let mut c = Circuit::new();
        c.push(Gate::Rz {
            qubit: q,
            angle: -2.0 * angle,
        });
        return Ok(c);
    }
    let root = tree_center(tree);
    let rt = rooted(tree, root);

    // One duplication per bridged node, onto a child: prefer a child outside
    // the bridge set (it absorbs the copy without chaining), then the child
    // heading the longest downward path, then smallest id.
    let bridged: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|n| !constraint.contains(n))
        .collect();
    let mut duplications: Vec<(usize, usize)> = Vec::new();
    for &u in &bridged {
        let kids = &rt.children[&u];
        debug_assert!(!kids.is_empty(), "leaves are terminals, root is checked");
        let pick = kids
            .iter()
            .copied()
            .min_by_key(|c| {
                let is_bridged = !constraint.contains(c);
                (is_bridged, std::cmp::Reverse(rt.height[c]), *c)
            })
            .ok_or_else(|| Error::Input("bridged node has no child".into()))?;
        duplications.push((u, pick));
    }
    // Deepest first: along a bridged chain the lower duplication must fire
    // before its parent's, so each control still holds its original value.
    duplications.sort_by_key(|&(u, _)| (std::cmp::Reverse(rt.depth[&u]), u));

    let pre = order_pre_sequence(&duplications, &fan_in_sequence(&rt));
    Ok(sandwich(&pre, root, angle))
}

/// Synthesizes a constraint over its Steiner tree, local or bridged.
pub fn synth_constraint(
    tree: &SteinerTree,
    constraint: &BTreeSet<usize>,
    angle: f64,
) -> Result<Circuit> {
    if tree.nodes() == *constraint {
        let root = choose_root(tree, constraint)?;
        synth_local(tree, root, angle)
    } else {
        synth_bridged(tree, constraint, angle)
    }
}

/// Naive SWAP baseline: swap constraint qubits together (3 CNOTs per SWAP,
/// no cross-gate cancellation), apply the local constraint, swap back.
///
/// Two-qubit constraints at path distance l move both endpoints toward the
/// middle, costing 2 + 6(l−1) CNOTs at depth 6⌈(l+1)/2⌉ − 4; larger
/// constraints gather greedily along shortest paths.
pub fn synth_swap_baseline(
    device: &DeviceGraph,
    constraint: &BTreeSet<usize>,
    angle: f64,
) -> Result<Circuit> {
    let members: Vec<usize> = constraint.iter().copied().collect();
    match members.len() {
        0 => Err(Error::Input("empty constraint".into())),
        1 => {
            let mut c = Circuit::new();
            c.push(Gate::Rz {
                qubit: members[0],
                angle: -2.0 * angle,
            });
            Ok(c)
        }
        2 => Ok(swap_baseline_pair(device, members[0], members[1], angle)),
        _ => swap_baseline_gather(device, &members, angle),
    }
}

fn swap_gates(a: usize, b: usize) -> [Gate; 3] {
    [
        Gate::Cnot {
            control: a,
            target: b,
        },
        Gate::Cnot {
            control: b,
            target: a,
        },
        Gate::Cnot {
            control: a,
            target: b,
        },
    ]
}

fn swap_baseline_pair(device: &DeviceGraph, a: usize, b: usize, angle: f64) -> Circuit {
    let path = device.shortest_path(a, b);
    let l = path.len() - 1;
    let moves_left = l.saturating_sub(1).div_ceil(2);
    let moves_right = l.saturating_sub(1) - moves_left;
    let mut swaps_in: Vec<(usize, usize)> = Vec::new();
    for i in 0..moves_left {
        swaps_in.push((path[i], path[i + 1]));
    }
    for j in 0..moves_right {
        swaps_in.push((path[l - j], path[l - j - 1]));
    }
    let mut c = Circuit::new();
    for &(x, y) in &swaps_in {
        c.gates.extend(swap_gates(x, y));
    }
    let (near_a, near_b) = (path[moves_left], path[moves_left + 1]);
    c.push(Gate::Cnot {
        control: near_a,
        target: near_b,
    });
    c.push(Gate::Rz {
        qubit: near_b,
        angle: -2.0 * angle,
    });
    c.push(Gate::Cnot {
        control: near_a,
        target: near_b,
    });
    for &(x, y) in swaps_in.iter().rev() {
        c.gates.extend(swap_gates(x, y));
    }
    c
}

fn swap_baseline_gather(device: &DeviceGraph, members: &[usize], angle: f64) -> Result<Circuit> {
    // Track where each member's value currently sits.
    let mut loc: Vec<usize> = members.to_vec();
    let mut swaps: Vec<(usize, usize)> = Vec::new();
    let anchor = *members
        .iter()
        .min_by_key(|&&m| {
            let total: usize = members.iter().map(|&o| device.distance(m, o)).sum();
            (total, m)
        })
        .unwrap();

    // Settle members one by one: each moves along shortest paths until it
    // touches the already-settled cluster.
    let anchor_idx = members.iter().position(|&m| m == anchor).unwrap();
    let mut cluster: BTreeSet<usize> = BTreeSet::from([anchor]);
    let mut order: Vec<usize> = (0..members.len()).filter(|&i| i != anchor_idx).collect();
    order.sort_by_key(|&i| (device.distance(loc[i], anchor), members[i]));
    for i in order {
        loop {
            let cur = loc[i];
            if cluster.iter().any(|&c| device.has_edge(cur, c)) || cluster.contains(&cur) {
                break;
            }
            let goal = *cluster
                .iter()
                .min_by_key(|&&c| (device.distance(cur, c), c))
                .unwrap();
            let next = device.shortest_path(cur, goal)[1];
            swaps.push((cur, next));
            // Whatever sat on `next` (possibly an unsettled member) moves back.
            for l in loc.iter_mut() {
                if *l == next {
                    *l = cur;
                }
            }
            loc[i] = next;
        }
        cluster.insert(loc[i]);
    }

    let mut c = Circuit::new();
    for &(x, y) in &swaps {
        c.gates.extend(swap_gates(x, y));
    }
    // The gathered values occupy a connected set; rotate over its spanning tree.
    let tree = crate::device::general_steiner(device, &cluster)?;
    let root = choose_root(&tree, &cluster)?;
    c.extend(&synth_local(&tree, root, angle)?);
    for &(x, y) in swaps.iter().rev() {
        c.gates.extend(swap_gates(x, y));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::steiner_tree;
    use crate::oracle::{assert_equiv, circuit_unitary, constraint_target};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Renames circuit qubits to dense indices so the oracle stays small.
    fn densify(c: &Circuit, nodes: &BTreeSet<usize>) -> (Circuit, BTreeMap<usize, usize>) {
        let map: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let gates = c
            .gates
            .iter()
            .map(|g| match *g {
                Gate::Cnot { control, target } => Gate::Cnot {
                    control: map[&control],
                    target: map[&target],
                },
                Gate::Rz { qubit, angle } => Gate::Rz {
                    qubit: map[&qubit],
                    angle,
                },
                Gate::Rx { qubit, angle } => Gate::Rx {
                    qubit: map[&qubit],
                    angle,
                },
                Gate::Exchange { a, b, angle } => Gate::Exchange {
                    a: map[&a],
                    b: map[&b],
                    angle,
                },
            })
            .collect();
        (Circuit { gates }, map)
    }

    /// Oracle check: the circuit implements exp(iα·∏_{C}σz) on the tree
    /// qubits, up to global phase, within 1e−9.
    fn verify_constraint_circuit(
        c: &Circuit,
        all_nodes: &BTreeSet<usize>,
        constraint: &BTreeSet<usize>,
        angle: f64,
    ) {
        let (dense, map) = densify(c, all_nodes);
        let n = all_nodes.len();
        assert!(n <= 10, "keep oracle instances small");
        let u = circuit_unitary(&dense, n).unwrap();
        let target_qubits: BTreeSet<usize> = constraint.iter().map(|q| map[q]).collect();
        let target = constraint_target(&target_qubits, n, angle, 1).unwrap();
        let (eq, dev) = assert_equiv(&u, &target, 1e-9).unwrap();
        assert!(eq, "deviation {dev} for constraint {constraint:?}");
    }

    fn path_tree(nodes: &[usize]) -> SteinerTree {
        SteinerTree {
            terminals: nodes.iter().copied().collect(),
            edges: nodes
                .windows(2)
                .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
                .collect(),
        }
    }

    #[test]
    fn choose_root_prefers_center() {
        let t = path_tree(&[0, 1, 2]);
        assert_eq!(choose_root(&t, &BTreeSet::from([0, 1, 2])).unwrap(), 1);
        let single = SteinerTree {
            terminals: BTreeSet::from([7]),
            edges: BTreeSet::new(),
        };
        assert_eq!(choose_root(&single, &BTreeSet::from([7])).unwrap(), 7);

        // Six-qubit branched tree: the chosen root's eccentricity is
        // minimal among all constraint nodes, by exhaustive comparison.
        let t = SteinerTree {
            terminals: BTreeSet::from([0, 1, 2, 3, 4, 5]),
            edges: BTreeSet::from([(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]),
        };
        let root = choose_root(&t, &t.terminals).unwrap();
        let ecc = |start: usize| -> usize {
            let adj = t.adjacency();
            let mut dist = BTreeMap::from([(start, 0usize)]);
            let mut queue = VecDeque::from([start]);
            let mut worst = 0;
            while let Some(v) = queue.pop_front() {
                for &w in &adj[&v] {
                    if !dist.contains_key(&w) {
                        dist.insert(w, dist[&v] + 1);
                        worst = worst.max(dist[&v] + 1);
                        queue.push_back(w);
                    }
                }
            }
            worst
        };
        for &alternative in &t.terminals {
            assert!(ecc(root) <= ecc(alternative));
        }
    }

    #[test]
    fn local_three_qubit_needs_four_cnots() {
        let t = path_tree(&[0, 1, 2]);
        let c = synth_local(&t, 1, 0.3).unwrap();
        assert_eq!(c.cnot_count(), 4);
        verify_constraint_circuit(&c, &t.nodes(), &t.terminals, 0.3);
    }

    #[test]
    fn local_single_qubit_is_one_rotation() {
        let t = SteinerTree {
            terminals: BTreeSet::from([4]),
            edges: BTreeSet::new(),
        };
        let c = synth_local(&t, 4, 0.9).unwrap();
        assert_eq!(c.cnot_count(), 0);
        assert_eq!(c.gates.len(), 1);
    }

    #[test]
    fn local_six_qubit_tree_counts_and_mirror() {
        // Branched six-node tree: 2(6−1) = 10 CNOTs.
        let t = SteinerTree {
            terminals: BTreeSet::from([0, 1, 2, 3, 4, 5]),
            edges: BTreeSet::from([(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]),
        };
        let root = choose_root(&t, &t.terminals).unwrap();
        let c = synth_local(&t, root, 0.25).unwrap();
        assert_eq!(c.cnot_count(), 10);
        // Mirror structure: post-rotation CNOTs reverse the pre-rotation ones.
        let pre: Vec<_> = c.gates[..5].to_vec();
        let post: Vec<_> = c.gates[6..].to_vec();
        let mut rev = pre.clone();
        rev.reverse();
        assert_eq!(post, rev);
        verify_constraint_circuit(&c, &t.nodes(), &t.terminals, 0.25);
    }

    #[test]
    fn bridged_counts_match_formula() {
        // Distance 2: one bridged qubit, 6 CNOTs.
        let t = path_tree(&[0, 1, 2]);
        let constraint = BTreeSet::from([0, 2]);
        let tree = SteinerTree {
            terminals: constraint.clone(),
            edges: t.edges.clone(),
        };
        let c = synth_bridged(&tree, &constraint, 0.4).unwrap();
        assert_eq!(c.cnot_count(), 6);
        verify_constraint_circuit(&c, &tree.nodes(), &constraint, 0.4);

        // |T| = 6, |C| = 4: 4·6 − 2·4 − 2 = 14.
        let tree = SteinerTree {
            terminals: BTreeSet::from([0, 2, 4, 5]),
            edges: BTreeSet::from([(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]),
        };
        let constraint = BTreeSet::from([0, 2, 4, 5]);
        let c = synth_bridged(&tree, &constraint, 0.4).unwrap();
        assert_eq!(c.cnot_count(), 14);
        verify_constraint_circuit(&c, &tree.nodes(), &constraint, 0.4);
    }

    #[test]
    fn bridged_without_bridges_equals_local() {
        let t = path_tree(&[0, 1, 2, 3]);
        let c_local = synth_local(&t, choose_root(&t, &t.terminals).unwrap(), 0.2).unwrap();
        let c_bridged = synth_bridged(&t, &t.terminals, 0.2).unwrap();
        let mut a = c_local.gates.clone();
        let mut b = c_bridged.gates.clone();
        let key = |g: &Gate| format!("{g:?}");
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b, "same gate multiset");
        assert_eq!(c_bridged.cnot_count(), 2 * (4 - 1));
    }

    #[test]
    fn bridged_chain_counts_and_depths() {
        // 2-qubit constraints at distance l on a chain: 2+4(l−1) CNOTs,
        // CNOT depth within the stated bounds.
        for l in 1usize..=8 {
            let nodes: Vec<usize> = (0..=l).collect();
            let tree = SteinerTree {
                terminals: BTreeSet::from([0, l]),
                edges: nodes.windows(2).map(|w| (w[0], w[1])).collect(),
            };
            let constraint = BTreeSet::from([0, l]);
            let c = synth_bridged(&tree, &constraint, 0.7).unwrap();
            assert_eq!(c.cnot_count(), 2 + 4 * (l - 1), "l={l}");
            let full_depth = 2 * (l + 1).div_ceil(2);
            let bound = match l {
                1 => full_depth,
                2..=4 => full_depth + 2,
                _ => full_depth + 4,
            };
            assert!(
                c.cnot_depth() <= bound,
                "l={l}: depth {} > bound {bound}",
                c.cnot_depth()
            );
            if l <= 8 {
                verify_constraint_circuit(&c, &tree.nodes(), &constraint, 0.7);
            }
        }
    }

    #[test]
    fn swap_baseline_pair_counts_and_depths() {
        let device = DeviceGraph::chain(9).unwrap();
        for l in 1usize..=8 {
            let c = synth_swap_baseline(&device, &BTreeSet::from([0, l]), 0.3).unwrap();
            assert_eq!(c.cnot_count(), 2 + 6 * (l - 1), "l={l}");
            assert_eq!(c.cnot_depth(), 6 * (l + 1).div_ceil(2) - 4, "l={l}");
            if l <= 7 {
                let nodes: BTreeSet<usize> = (0..=l).collect();
                verify_constraint_circuit(&c, &nodes, &BTreeSet::from([0, l]), 0.3);
            }
        }
    }

    #[test]
    fn swap_baseline_gather_is_correct() {
        let device = DeviceGraph::grid(3, 3).unwrap();
        let constraint = BTreeSet::from([0, 2, 8]);
        let c = synth_swap_baseline(&device, &constraint, 0.55).unwrap();
        let nodes: BTreeSet<usize> = (0..9).collect();
        verify_constraint_circuit(&c, &nodes, &constraint, 0.55);
    }

    #[test]
    fn bridged_depth_within_four_of_full_tree_on_random_instances() {
        let grid = DeviceGraph::grid(5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let k = rng.random_range(2..=5);
            let mut terminals = BTreeSet::new();
            while terminals.len() < k {
                terminals.insert(grid.node_ids()[rng.random_range(0..grid.n_nodes())]);
            }
            let tree = steiner_tree(&grid, &terminals).unwrap();
            let bridged = synth_bridged(&tree, &terminals, 0.3).unwrap();
            let full = synth_bridged(&tree, &tree.nodes(), 0.3).unwrap();
            assert!(
                bridged.cnot_depth() <= full.cnot_depth() + 4,
                "depth {} vs full {} for terminals {terminals:?}",
                bridged.cnot_depth(),
                full.cnot_depth()
            );
            let t = tree.nodes();
            let c = terminals.len();
            assert_eq!(bridged.cnot_count(), 4 * t.len() - 2 * c - 2);
        }
    }

    #[test]
    fn twenty_random_angles_per_instance() {
        let cases = [
            (path_tree(&[0, 1, 2, 3]), BTreeSet::from([0, 3])),
            (
                SteinerTree {
                    terminals: BTreeSet::from([0, 2, 4, 5]),
                    edges: BTreeSet::from([(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]),
                },
                BTreeSet::from([0, 2, 4, 5]),
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for (tree, constraint) in &cases {
            for _ in 0..20 {
                let angle = rng.random_range(-6.0..6.0);
                let c = synth_constraint(tree, constraint, angle).unwrap();
                verify_constraint_circuit(&c, &tree.nodes(), constraint, angle);
            }
        }
    }

    #[test]
    fn random_constraints_match_oracle() {
        let grid = DeviceGraph::grid(4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let k = rng.random_range(2..=4);
            let mut terminals = BTreeSet::new();
            while terminals.len() < k {
                terminals.insert(rng.random_range(0..8));
            }
            let tree = steiner_tree(&grid, &terminals).unwrap();
            let angle = rng.random_range(-3.0..3.0);
            let c = synth_constraint(&tree, &terminals, angle).unwrap();
            verify_constraint_circuit(&c, &tree.nodes(), &terminals, angle);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = path_tree(&[0, 1, 2]);
        assert!(synth_bridged(&t, &BTreeSet::from([0, 9]), 0.1).is_err());
        assert!(synth_local(&t, 9, 0.1).is_err());
        let mixed = SteinerTree {
            terminals: BTreeSet::from([0, 2]),
            edges: BTreeSet::from([(0, 1), (1, 2)]),
        };
        assert!(
            synth_local(&mixed, 0, 0.1).is_err(),
            "local synthesis must reject non-constraint tree nodes"
        );
    }
}
