//! Local search over qubit placements and constraint-basis choices.
//!
//! Two move kinds drive the search: exchanging the positions of two qubits
//! (or relocating one to a free node), and replacing a basis row by its
//! GF(2) sum with another row. Hill climbing accepts strict cost
//! improvements only, restarts from seeded random layouts, and always keeps
//! polynomial-constraint groups on connected node sets.

use std::collections::{BTreeSet, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{Constraint, ConstraintBasis};
use crate::circuit::Circuit;
use crate::device::{steiner_tree, DeviceGraph, Layout, SteinerTree};
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{fold_virtual_qubits, HcboProblem, ParityQubit};
use crate::synth::synth_constraint;

/// Everything immutable during a search run.
pub struct CompileContext<'a> {
    pub problem: &'a HcboProblem,
    pub device: &'a DeviceGraph,
    /// Problem qubits (terms + virtual product-constraint qubits).
    pub qubits: Vec<ParityQubit>,
    /// Polynomial-constraint member qubit ids, one list per constraint.
    pub groups: Vec<Vec<usize>>,
}

impl<'a> CompileContext<'a> {
    pub fn new(problem: &'a HcboProblem, device: &'a DeviceGraph) -> Self {
        CompileContext {
            problem,
            device,
            qubits: problem.parity_qubits(),
            groups: problem.polynomial_groups(),
        }
    }

    /// Ids of qubits that occupy hardware: non-virtual problem qubits plus
    /// the basis ancillas.
    pub fn hardware_ids(&self, basis: &ConstraintBasis) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .qubits
            .iter()
            .filter(|q| !q.is_virtual())
            .map(|q| q.id)
            .collect();
        ids.extend(basis.ancillas.iter().map(|a| a.id));
        ids
    }
}

/// Lexicographic cost: CNOT total first or estimated depth first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cost {
    pub cnots: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostOrder {
    #[default]
    CnotFirst,
    DepthFirst,
}

impl CostOrder {
    pub fn key(&self, c: Cost) -> (usize, usize) {
        match self {
            CostOrder::CnotFirst => (c.cnots, c.depth),
            CostOrder::DepthFirst => (c.depth, c.cnots),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompilationState {
    pub layout: Layout,
    pub basis: ConstraintBasis,
    /// One tree per basis constraint, over the folded (hardware) members.
    pub trees: Vec<SteinerTree>,
    pub cost: Cost,
}

impl CompilationState {
    /// Constraint circuits of one problem layer, in basis order, with a
    /// unit placeholder angle.
    pub fn constraint_circuits(&self, ctx: &CompileContext) -> Result<Vec<Circuit>> {
        self.basis
            .constraints
            .iter()
            .zip(&self.trees)
            .map(|(c, tree)| {
                let folded = folded_nodes(ctx, &self.layout, c)?;
                if folded.is_empty() {
                    return Ok(Circuit::new());
                }
                synth_constraint(tree, &folded, 1.0)
            })
            .collect()
    }
}

/// Hardware nodes of a constraint after folding out virtual qubits.
pub fn folded_nodes(
    ctx: &CompileContext,
    layout: &Layout,
    c: &Constraint,
) -> Result<BTreeSet<usize>> {
    let folded = fold_virtual_qubits(c, &ctx.qubits);
    folded
        .qubits
        .iter()
        .map(|&q| layout.node_of(q).ok_or(Error::UnknownId(q)))
        .collect()
}

fn compute_tree(ctx: &CompileContext, layout: &Layout, c: &Constraint) -> Result<SteinerTree> {
    let nodes = folded_nodes(ctx, layout, c)?;
    if nodes.is_empty() {
        return Ok(SteinerTree {
            terminals: BTreeSet::new(),
            edges: BTreeSet::new(),
        });
    }
    steiner_tree(ctx.device, &nodes)
}

/// CNOT total by the tree formula and estimated depth from the greedy
/// parallel schedule of all constraint circuits in one layer.
pub fn compute_cost(ctx: &CompileContext, state: &CompilationState) -> Result<Cost> {
    let mut cnots = 0;
    for (c, tree) in state.basis.constraints.iter().zip(&state.trees) {
        let n_c = folded_nodes(ctx, &state.layout, c)?.len();
        if n_c == 0 {
            continue;
        }
        let n_t = tree.nodes().len();
        cnots += 4 * n_t - 2 * n_c - 2;
    }
    let mut layer = Circuit::new();
    for c in state.constraint_circuits(ctx)? {
        layer.extend(&c);
    }
    Ok(Cost {
        cnots,
        depth: layer.depth(),
    })
}

/// Whether the nodes of a polynomial group induce a connected subgraph.
fn group_connected(ctx: &CompileContext, layout: &Layout, group: &[usize]) -> bool {
    let nodes: Vec<usize> = group.iter().filter_map(|&q| layout.node_of(q)).collect();
    if nodes.len() != group.len() {
        return false;
    }
    if nodes.len() <= 1 {
        return true;
    }
    let set: BTreeSet<usize> = nodes.iter().copied().collect();
    let mut seen = BTreeSet::from([nodes[0]]);
    let mut queue = VecDeque::from([nodes[0]]);
    while let Some(v) = queue.pop_front() {
        for w in ctx.device.neighbors(v) {
            if set.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen.len() == set.len()
}

fn check_groups_containing(ctx: &CompileContext, layout: &Layout, touched: &[usize]) -> Result<()> {
    for group in &ctx.groups {
        if group.iter().any(|q| touched.contains(q)) && !group_connected(ctx, layout, group) {
            return Err(Error::MoveRejected(format!(
                "polynomial group {group:?} would lose hardware adjacency"
            )));
        }
    }
    Ok(())
}

fn refresh_trees_for(
    ctx: &CompileContext,
    state: &mut CompilationState,
    touched: &[usize],
) -> Result<()> {
    for (i, c) in state.basis.constraints.iter().enumerate() {
        if touched.iter().any(|q| c.qubits.contains(q)) {
            state.trees[i] = compute_tree(ctx, &state.layout, c)?;
        }
    }
    state.cost = compute_cost(ctx, state)?;
    Ok(())
}

/// Exchanges the positions of two placed qubits. Rejected when it breaks a
/// polynomial group's adjacency.
pub fn swap_move(
    ctx: &CompileContext,
    state: &CompilationState,
    qubit_a: usize,
    qubit_b: usize,
) -> Result<CompilationState> {
    if qubit_a == qubit_b {
        return Ok(state.clone());
    }
    for q in [qubit_a, qubit_b] {
        if state.layout.node_of(q).is_none() {
            return Err(Error::UnknownId(q));
        }
    }
    let mut next = state.clone();
    next.layout.swap_qubits(qubit_a, qubit_b);
    check_groups_containing(ctx, &next.layout, &[qubit_a, qubit_b])?;
    refresh_trees_for(ctx, &mut next, &[qubit_a, qubit_b])?;
    Ok(next)
}

/// Moves one qubit onto a free node.
pub fn relocate_move(
    ctx: &CompileContext,
    state: &CompilationState,
    qubit: usize,
    node: usize,
) -> Result<CompilationState> {
    let mut next = state.clone();
    next.layout.relocate(qubit, node)?;
    check_groups_containing(ctx, &next.layout, &[qubit])?;
    refresh_trees_for(ctx, &mut next, &[qubit])?;
    Ok(next)
}

/// Replaces basis row `i` by row i ⊕ row j (an elementary row operation, so
/// the basis stays a basis); signs multiply.
pub fn basis_move(
    ctx: &CompileContext,
    state: &CompilationState,
    i: usize,
    j: usize,
) -> Result<CompilationState> {
    if i == j {
        return Err(Error::MoveRejected(
            "basis move needs two distinct rows".into(),
        ));
    }
    if i >= state.basis.constraints.len() || j >= state.basis.constraints.len() {
        return Err(Error::UnknownId(i.max(j)));
    }
    let mut next = state.clone();
    let row_j = next.basis.constraints[j].clone();
    let row_i = &mut next.basis.constraints[i];
    row_i.qubits = row_i
        .qubits
        .symmetric_difference(&row_j.qubits)
        .copied()
        .collect();
    row_i.sign *= row_j.sign;
    if row_i.qubits.is_empty() {
        return Err(Error::MoveRejected("basis move would zero a row".into()));
    }
    let folded = fold_virtual_qubits(&next.basis.constraints[i], &ctx.qubits);
    if folded.qubits.is_empty() && folded.sign != 1 {
        return Err(Error::MoveRejected(
            "basis move would create an unsatisfiable virtual row".into(),
        ));
    }
    next.trees[i] = compute_tree(ctx, &next.layout, &next.basis.constraints[i])?;
    next.cost = compute_cost(ctx, &next)?;
    Ok(next)
}

/// Pairwise placement affinity: shared logical indices plus shared basis
/// constraints.
fn affinity(ctx: &CompileContext, basis: &ConstraintBasis, a: usize, b: usize) -> usize {
    let label = |id: usize| -> BTreeSet<usize> {
        ctx.qubits
            .iter()
            .find(|q| q.id == id)
            .map(|q| q.label.clone())
            .unwrap_or_default()
    };
    let shared_spins = label(a).intersection(&label(b)).count();
    let shared_constraints = basis
        .constraints
        .iter()
        .filter(|c| c.qubits.contains(&a) && c.qubits.contains(&b))
        .count();
    shared_spins + 2 * shared_constraints
}

/// Builds a feasible initial layout: polynomial groups first as contiguous
/// blocks, remaining qubits greedily by affinity to what is already placed.
/// With an RNG, group anchors and remaining placements randomize (used for
/// restarts); placement stays feasible either way.
pub fn initial_state(
    ctx: &CompileContext,
    basis: &ConstraintBasis,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<CompilationState> {
    let hardware = ctx.hardware_ids(basis);
    if hardware.len() > ctx.device.n_nodes() {
        return Err(Error::Infeasible(format!(
            "{} hardware qubits exceed {} device nodes",
            hardware.len(),
            ctx.device.n_nodes()
        )));
    }
    let mut layout = Layout::new();

    // Merge overlapping groups into clusters placed as one block.
    let mut clusters: Vec<BTreeSet<usize>> = Vec::new();
    for group in &ctx.groups {
        let gs: BTreeSet<usize> = group.iter().copied().collect();
        let mut merged = gs;
        while let Some(pos) = clusters.iter().position(|c| !c.is_disjoint(&merged)) {
            let other = clusters.remove(pos);
            merged.extend(other);
        }
        clusters.push(merged);
    }
    clusters.sort_by(|a, b| (b.len(), a.iter().next()).cmp(&(a.len(), b.iter().next())));

    let mut rng = rng;
    for cluster in &clusters {
        let mut starts: Vec<usize> = ctx
            .device
            .node_ids()
            .iter()
            .copied()
            .filter(|n| layout.qubit_at(*n).is_none())
            .collect();
        if let Some(r) = rng.as_deref_mut() {
            starts.shuffle(r);
        }
        let mut placed = false;
        'starts: for &start in &starts {
            // Grow a connected free region of the right size.
            let mut region = vec![start];
            let mut region_set = BTreeSet::from([start]);
            while region.len() < cluster.len() {
                let mut frontier: Vec<usize> = region
                    .iter()
                    .flat_map(|&n| ctx.device.neighbors(n))
                    .filter(|n| layout.qubit_at(*n).is_none() && !region_set.contains(n))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                if frontier.is_empty() {
                    continue 'starts;
                }
                if let Some(r) = rng.as_deref_mut() {
                    frontier.shuffle(r);
                }
                let next = frontier[0];
                region.push(next);
                region_set.insert(next);
            }
            let mut trial = layout.clone();
            for (&q, &n) in cluster.iter().zip(region.iter()) {
                trial.assign(q, n)?;
            }
            // Each individual group must be connected, not just the cluster.
            let ok = ctx
                .groups
                .iter()
                .filter(|g| g.iter().any(|q| cluster.contains(q)))
                .all(|g| group_connected(ctx, &trial, g));
            if ok {
                layout = trial;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!(
                "no contiguous placement for polynomial group cluster {cluster:?}"
            )));
        }
    }

    // Remaining qubits by affinity, or randomly on restarts.
    let mut remaining: Vec<usize> = hardware
        .iter()
        .copied()
        .filter(|q| layout.node_of(*q).is_none())
        .collect();
    if let Some(r) = rng {
        remaining.shuffle(r);
        for q in remaining {
            let mut free: Vec<usize> = ctx
                .device
                .node_ids()
                .iter()
                .copied()
                .filter(|n| layout.qubit_at(*n).is_none())
                .collect();
            free.shuffle(r);
            layout.assign(q, free[0])?;
        }
    } else {
        while !remaining.is_empty() {
            let pick = *remaining
                .iter()
                .max_by_key(|&&q| {
                    let total: usize = layout.iter().map(|(p, _)| affinity(ctx, basis, q, p)).sum();
                    (total, std::cmp::Reverse(q))
                })
                .unwrap();
            remaining.retain(|&q| q != pick);
            let node = ctx
                .device
                .node_ids()
                .iter()
                .copied()
                .filter(|n| layout.qubit_at(*n).is_none())
                .min_by_key(|&n| {
                    let pull: usize = layout
                        .iter()
                        .map(|(p, pn)| affinity(ctx, basis, pick, p) * ctx.device.distance(n, pn))
                        .sum();
                    (pull, n)
                })
                .unwrap();
            layout.assign(pick, node)?;
        }
    }

    let trees = basis
        .constraints
        .iter()
        .map(|c| compute_tree(ctx, &layout, c))
        .collect::<Result<Vec<_>>>()?;
    let mut state = CompilationState {
        layout,
        basis: basis.clone(),
        trees,
        cost: Cost { cnots: 0, depth: 0 },
    };
    state.cost = compute_cost(ctx, &state)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Swap(usize, usize),
    Relocate(usize, usize),
    BasisXor(usize, usize),
}

fn apply_move(ctx: &CompileContext, state: &CompilationState, m: Move) -> Result<CompilationState> {
    match m {
        Move::Swap(a, b) => swap_move(ctx, state, a, b),
        Move::Relocate(q, n) => relocate_move(ctx, state, q, n),
        Move::BasisXor(i, j) => basis_move(ctx, state, i, j),
    }
}

fn candidate_moves(ctx: &CompileContext, state: &CompilationState) -> Vec<Move> {
    let placed: Vec<usize> = state.layout.iter().map(|(q, _)| q).collect();
    let free: Vec<usize> = ctx
        .device
        .node_ids()
        .iter()
        .copied()
        .filter(|n| state.layout.qubit_at(*n).is_none())
        .collect();
    let mut moves = Vec::new();
    for (i, &a) in placed.iter().enumerate() {
        for &b in &placed[i + 1..] {
            moves.push(Move::Swap(a, b));
        }
    }
    for &q in &placed {
        for &n in &free {
            moves.push(Move::Relocate(q, n));
        }
    }
    let k = state.basis.constraints.len();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                moves.push(Move::BasisXor(i, j));
            }
        }
    }
    moves
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub restart: usize,
    pub step: usize,
    pub action: String,
    pub cnots: usize,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
    pub cost_order: CostOrder,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seed: 0,
            budget: 10_000,
            restarts: 8,
            cost_order: CostOrder::CnotFirst,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub evaluations: usize,
    pub accepted_moves: usize,
    pub restarts: usize,
    pub initial: Cost,
    #[serde(rename = "final")]
    pub final_cost: Cost,
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    // splitmix-style stream separation per restart
    let mut z = seed
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_mul(0xbf58476d1ce4e5b9)
        .wrapping_add(restart as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

struct RestartOutcome {
    state: CompilationState,
    trace: Vec<TraceEvent>,
    evaluations: usize,
}

fn run_restart(
    ctx: &CompileContext,
    basis: &ConstraintBasis,
    opts: &SearchOptions,
    restart: usize,
    budget: usize,
) -> Result<RestartOutcome> {
    let mut rng = restart_rng(opts.seed, restart);
    // Restart 0 starts from the greedy affinity layout, later ones from
    // random permuted feasible layouts.
    let mut state = if restart == 0 {
        initial_state(ctx, basis, None)?
    } else {
        initial_state(ctx, basis, Some(&mut rng))?
    };
    let mut trace = Vec::new();
    let mut evaluations = 0usize;
    let mut step = 0usize;
    'search: loop {
        let mut moves = candidate_moves(ctx, &state);
        moves.shuffle(&mut rng);
        let current_key = opts.cost_order.key(state.cost);
        let mut accepted = false;
        for chunk in moves.chunks(64) {
            if evaluations >= budget {
                break 'search;
            }
            let take = chunk.len().min(budget - evaluations);
            let slice = &chunk[..take];
            let costs = par::map_slice(slice, |&m| apply_move(ctx, &state, m).ok().map(|s| s.cost));
            evaluations += take;
            // First improvement in candidate order.
            for (idx, cost) in costs.iter().enumerate() {
                let Some(cost) = cost else { continue };
                if opts.cost_order.key(*cost) < current_key {
                    let m = slice[idx];
                    state = apply_move(ctx, &state, m)?;
                    step += 1;
                    trace.push(TraceEvent {
                        restart,
                        step,
                        action: format!("{m:?}"),
                        cnots: state.cost.cnots,
                        depth: state.cost.depth,
                    });
                    accepted = true;
                    break;
                }
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(RestartOutcome {
        state,
        trace,
        evaluations,
    })
}

/// Hill-climbing search over swaps, relocations and basis moves.
/// Deterministic for a given seed: restarts use independent seeded RNG
/// streams, candidate evaluation preserves order, and the best restart wins
/// ties by index.
pub fn local_search(
    ctx: &CompileContext,
    basis: &ConstraintBasis,
    opts: &SearchOptions,
) -> Result<(CompilationState, Vec<TraceEvent>, SearchSummary)> {
    if opts.restarts == 0 {
        return Err(Error::Input("search needs at least one restart".into()));
    }
    // Fail fast on infeasible placement, before spending the budget.
    let initial = initial_state(ctx, basis, None)?;
    let initial_cost = initial.cost;
    let per_restart = (opts.budget / opts.restarts).max(1);
    let outcomes = par::map_range(opts.restarts, |r| {
        run_restart(ctx, basis, opts, r, per_restart)
    });
    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        evaluations += outcome.evaluations;
        trace.extend(outcome.trace.iter().cloned());
        let better = match &best {
            None => true,
            Some((_, b)) => {
                opts.cost_order.key(outcome.state.cost) < opts.cost_order.key(b.state.cost)
            }
        };
        if better {
            best = Some((r, outcome));
        }
    }
    let (_, chosen) = best.expect("at least one restart ran");
    let summary = SearchSummary {
        evaluations,
        accepted_moves: trace.len(),
        restarts: opts.restarts,
        initial: initial_cost,
        final_cost: chosen.state.cost,
    };
    Ok((chosen.state, trace, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::find_short_basis;
    use crate::problem::{LogicalTerm, PolynomialConstraint};

    fn term(spins: &[usize]) -> LogicalTerm {
        LogicalTerm {
            spins: spins.iter().copied().collect(),
            coefficient: 1.0,
        }
    }

    /// Four-spin problem with all 2-body terms among the first three spins
    /// plus all 3-body terms: eight parity qubits, four constraints.
    fn dense_four_spin() -> HcboProblem {
        HcboProblem {
            n_spins: 4,
            terms: vec![
                term(&[1, 2]),
                term(&[1, 3]),
                term(&[1, 4]),
                term(&[2, 3]),
                term(&[1, 2, 3]),
                term(&[1, 2, 4]),
                term(&[1, 3, 4]),
                term(&[2, 3, 4]),
            ],
            ..Default::default()
        }
    }

    #[test]
    fn initial_state_is_feasible_and_costed() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        assert_eq!(state.layout.len(), 8);
        assert!(state.cost.cnots > 0);
        assert_eq!(state.trees.len(), basis.constraints.len());
    }

    #[test]
    fn cost_order_keys() {
        let cheap_gates = Cost { cnots: 5, depth: 9 };
        let shallow = Cost { cnots: 7, depth: 3 };
        assert!(CostOrder::CnotFirst.key(cheap_gates) < CostOrder::CnotFirst.key(shallow));
        assert!(CostOrder::DepthFirst.key(shallow) < CostOrder::DepthFirst.key(cheap_gates));
    }

    #[test]
    fn swap_self_is_identity() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let swapped = swap_move(&ctx, &state, 3, 3).unwrap();
        assert_eq!(swapped.layout, state.layout);
        assert_eq!(swapped.cost, state.cost);
    }

    #[test]
    fn swap_changes_trees_and_cost_consistently() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let next = swap_move(&ctx, &state, 0, 7).unwrap();
        assert_eq!(next.cost, compute_cost(&ctx, &next).unwrap());
    }

    #[test]
    fn basis_move_is_involutive_and_rank_preserving() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let once = basis_move(&ctx, &state, 0, 1).unwrap();
        assert_eq!(once.basis.to_matrix().rank(), basis.constraints.len());
        let twice = basis_move(&ctx, &once, 0, 1).unwrap();
        assert_eq!(twice.basis.constraints, state.basis.constraints);
        assert!(basis_move(&ctx, &state, 2, 2).is_err());
    }

    #[test]
    fn basis_moves_preserve_target_space() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let mut cur = state;
        for (i, j) in [(0, 1), (2, 3), (1, 2), (0, 3)] {
            cur = basis_move(&ctx, &cur, i, j).unwrap();
        }
        assert_eq!(
            cur.basis.ancilla_eliminated_space(),
            p.target_constraint_space().canonical_row_space()
        );
    }

    #[test]
    fn polynomial_groups_stay_adjacent() {
        let p = HcboProblem {
            n_spins: 4,
            terms: vec![term(&[1, 2]), term(&[2, 3]), term(&[3, 4]), term(&[1, 4])],
            polynomial_constraints: vec![PolynomialConstraint {
                members: vec![
                    [1usize, 2].into_iter().collect(),
                    [2usize, 3].into_iter().collect(),
                ],
                value: 0,
                initial_bits: Some(vec![0, 1]),
            }],
            ..Default::default()
        };
        p.validate().unwrap();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        assert!(group_connected(&ctx, &state.layout, &ctx.groups[0]));

        // Any accepted search state keeps the group adjacent.
        let opts = SearchOptions {
            budget: 400,
            restarts: 2,
            ..Default::default()
        };
        let (found, _, _) = local_search(&ctx, &basis, &opts).unwrap();
        assert!(group_connected(&ctx, &found.layout, &ctx.groups[0]));
    }

    #[test]
    fn search_is_deterministic_and_monotone() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let opts = SearchOptions {
            budget: 600,
            restarts: 2,
            ..Default::default()
        };
        let (s1, t1, _) = local_search(&ctx, &basis, &opts).unwrap();
        let (s2, t2, _) = local_search(&ctx, &basis, &opts).unwrap();
        assert_eq!(s1.cost, s2.cost);
        assert_eq!(t1.len(), t2.len());
        for (a, b) in t1.iter().zip(&t2) {
            assert_eq!(a.action, b.action);
        }
        // Accepted costs never increase within a restart.
        for r in 0..2 {
            let costs: Vec<usize> = t1
                .iter()
                .filter(|e| e.restart == r)
                .map(|e| e.cnots)
                .collect();
            assert!(costs.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn infeasible_when_device_too_small() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(4).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        assert!(matches!(
            initial_state(&ctx, &basis, None),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn all_local_three_qubit_constraints_cost_twelve() {
        // Three disjoint 3-qubit constraints, placed locally: 3 · 4 CNOTs.
        let p = HcboProblem {
            n_spins: 9,
            terms: vec![
                term(&[1, 2]),
                term(&[2, 3]),
                term(&[1, 3]),
                term(&[4, 5]),
                term(&[5, 6]),
                term(&[4, 6]),
                term(&[7, 8]),
                term(&[8, 9]),
                term(&[7, 9]),
            ],
            ..Default::default()
        };
        let device = DeviceGraph::grid(3, 3).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        assert_eq!(basis.constraints.len(), 3);
        let opts = SearchOptions {
            budget: 3000,
            restarts: 4,
            ..Default::default()
        };
        let (state, _, _) = local_search(&ctx, &basis, &opts).unwrap();
        assert_eq!(state.cost.cnots, 12);
    }

    #[test]
    fn empty_basis_costs_zero() {
        let p = HcboProblem {
            n_spins: 3,
            terms: vec![term(&[1]), term(&[2, 3])],
            ..Default::default()
        };
        let device = DeviceGraph::chain(2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        assert!(basis.constraints.is_empty());
        let state = initial_state(&ctx, &basis, None).unwrap();
        assert_eq!(state.cost, Cost { cnots: 0, depth: 0 });
    }

    #[test]
    fn target_space_restored_after_search() {
        let p = dense_four_spin();
        let device = DeviceGraph::chain(8).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let opts = SearchOptions {
            budget: 2000,
            restarts: 4,
            ..Default::default()
        };
        let (state, _, _) = local_search(&ctx, &basis, &opts).unwrap();
        assert_eq!(
            state.basis.ancilla_eliminated_space(),
            p.target_constraint_space().canonical_row_space()
        );
    }
}
