//! Assembly of full p-layer QAOA circuits from a compiled state: single-
//! qubit problem rotations, synthesized constraint rotations, and driver
//! layers with exchange gates on polynomial-constraint groups.
//!
//! Angle conventions (documented once, used everywhere): exp(iθσz) is
//! emitted as rz(−2θ) and exp(iθσx) as rx(−2θ), both exact without global
//! phase. Constraint angles default to the layer's gamma.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::layout::{folded_nodes, CompilationState, CompileContext};
use crate::qasm::PrepDirective;
use crate::synth::synth_constraint;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaoaSchedule {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Per-layer, per-constraint rotation angles; defaults to the layer
    /// gamma when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_angles: Option<Vec<Vec<f64>>>,
}

impl QaoaSchedule {
    pub fn uniform(layers: usize, gamma: f64, beta: f64) -> Self {
        QaoaSchedule {
            gammas: vec![gamma; layers],
            betas: vec![beta; layers],
            constraint_angles: None,
        }
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self, n_constraints: usize) -> Result<()> {
        if self.betas.len() != self.gammas.len() {
            return Err(Error::Input(format!(
                "schedule needs matching gammas ({}) and betas ({})",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if let Some(angles) = &self.constraint_angles {
            if angles.len() != self.gammas.len() || angles.iter().any(|a| a.len() != n_constraints)
            {
                return Err(Error::Input(
                    "constraint_angles must be one list per layer, one angle per constraint".into(),
                ));
            }
        }
        Ok(())
    }

    fn constraint_angle(&self, layer: usize, constraint: usize) -> f64 {
        self.constraint_angles
            .as_ref()
            .map(|a| a[layer][constraint])
            .unwrap_or(self.gammas[layer])
    }
}

/// Full assembled QAOA circuit plus the initial-state directives that the
/// emitter prints ahead of the gates.
#[derive(Debug, Clone)]
pub struct QaoaCircuit {
    pub prep: Vec<PrepDirective>,
    pub circuit: Circuit,
}

/// One problem layer: a σz rotation per term qubit (angle 2γJ), then every
/// constraint circuit. Constraints with sign −1 rotate by the negated angle.
pub fn build_problem_layer(
    ctx: &CompileContext,
    state: &CompilationState,
    gamma: f64,
    constraint_angles: &[f64],
) -> Result<Circuit> {
    let mut layer = Circuit::new();
    for (k, term) in ctx.problem.terms.iter().enumerate() {
        let node = state
            .layout
            .node_of(k)
            .ok_or_else(|| Error::Input(format!("term qubit {k} is unplaced")))?;
        layer.push(Gate::Rz {
            qubit: node,
            angle: -2.0 * gamma * term.coefficient,
        });
    }
    for (i, c) in state.basis.constraints.iter().enumerate() {
        let folded = folded_nodes(ctx, &state.layout, c)?;
        if folded.is_empty() {
            continue;
        }
        let sign = crate::problem::fold_virtual_qubits(c, &ctx.qubits).sign;
        let angle = f64::from(sign) * constraint_angles[i];
        layer.extend(&synth_constraint(&state.trees[i], &folded, angle)?);
    }
    Ok(layer)
}

/// One driver layer: σx rotations on every hardware qubit outside the
/// polynomial constraints, and one exchange gate per hardware-adjacent pair
/// inside each polynomial group, emitted as a single first-order pass over
/// the pair list.
pub fn build_driver_layer(
    ctx: &CompileContext,
    state: &CompilationState,
    beta: f64,
) -> Result<Circuit> {
    let in_group: BTreeSet<usize> = ctx.groups.iter().flatten().copied().collect();
    let mut layer = Circuit::new();
    for (q, node) in state.layout.iter() {
        if !in_group.contains(&q) {
            layer.push(Gate::Rx {
                qubit: node,
                angle: -2.0 * beta,
            });
        }
    }
    for group in &ctx.groups {
        for (a, b) in group_exchange_pairs(ctx, state, group)? {
            layer.push(Gate::Exchange { a, b, angle: beta });
        }
    }
    Ok(layer)
}

/// Hardware-adjacent member pairs of one polynomial group, as node pairs in
/// deterministic order. Errors when the group is not adjacency-connected
/// (unreachable after layout).
pub fn group_exchange_pairs(
    ctx: &CompileContext,
    state: &CompilationState,
    group: &[usize],
) -> Result<Vec<(usize, usize)>> {
    let nodes: Vec<usize> = group
        .iter()
        .map(|&q| state.layout.node_of(q).ok_or(Error::UnknownId(q)))
        .collect::<Result<_>>()?;
    let mut pairs = BTreeSet::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if ctx.device.has_edge(a, b) {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    if group.len() > 1 {
        // Spanning check over the induced pairs.
        let mut seen = BTreeSet::from([nodes[0]]);
        loop {
            let before = seen.len();
            for &(a, b) in &pairs {
                if seen.contains(&a) {
                    seen.insert(b);
                }
                if seen.contains(&b) {
                    seen.insert(a);
                }
            }
            if seen.len() == before {
                break;
            }
        }
        if seen.len() != nodes.len() {
            return Err(Error::Infeasible(format!(
                "polynomial group {group:?} is not hardware-adjacent"
            )));
        }
    }
    Ok(pairs.into_iter().collect())
}

/// Assembles the full circuit: preparation directives, then
/// [problem, driver] × p.
pub fn assemble(
    ctx: &CompileContext,
    state: &CompilationState,
    schedule: &QaoaSchedule,
) -> Result<QaoaCircuit> {
    schedule.validate(state.basis.constraints.len())?;
    let in_group: BTreeSet<usize> = ctx.groups.iter().flatten().copied().collect();
    let mut prep = Vec::new();
    let plus: Vec<usize> = state
        .layout
        .iter()
        .filter(|(q, _)| !in_group.contains(q))
        .map(|(_, n)| n)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !plus.is_empty() {
        prep.push(PrepDirective::Plus(plus));
    }
    for (gi, pc) in ctx.problem.polynomial_constraints.iter().enumerate() {
        let nodes: Vec<usize> = ctx.groups[gi]
            .iter()
            .map(|&q| state.layout.node_of(q).ok_or(Error::UnknownId(q)))
            .collect::<Result<_>>()?;
        match &pc.initial_bits {
            Some(bits) => prep.push(PrepDirective::GroupBits {
                group: gi,
                bits: nodes.iter().copied().zip(bits.iter().copied()).collect(),
            }),
            None => prep.push(PrepDirective::GroupUnspecified { group: gi, nodes }),
        }
    }

    let mut circuit = Circuit::new();
    for layer in 0..schedule.layers() {
        let angles: Vec<f64> = (0..state.basis.constraints.len())
            .map(|c| schedule.constraint_angle(layer, c))
            .collect();
        circuit.extend(&build_problem_layer(
            ctx,
            state,
            schedule.gammas[layer],
            &angles,
        )?);
        circuit.extend(&build_driver_layer(ctx, state, schedule.betas[layer])?);
    }
    Ok(QaoaCircuit { prep, circuit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::find_short_basis;
    use crate::device::DeviceGraph;
    use crate::layout::{initial_state, local_search, SearchOptions};
    use crate::problem::{HcboProblem, LogicalTerm, PolynomialConstraint};

    fn term(spins: &[usize]) -> LogicalTerm {
        LogicalTerm {
            spins: spins.iter().copied().collect(),
            coefficient: 1.0,
        }
    }

    fn plain_problem() -> HcboProblem {
        HcboProblem {
            n_spins: 5,
            terms: vec![
                term(&[1, 2]),
                term(&[1, 5]),
                term(&[2, 4]),
                term(&[4, 5]),
                term(&[1, 2, 3]),
                term(&[3, 4, 5]),
            ],
            ..Default::default()
        }
    }

    #[test]
    fn problem_layer_counts() {
        let p = plain_problem();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let opts = SearchOptions {
            budget: 1000,
            restarts: 2,
            ..Default::default()
        };
        let (state, _, _) = local_search(&ctx, &basis, &opts).unwrap();
        let angles = vec![0.5; state.basis.constraints.len()];
        let layer = build_problem_layer(&ctx, &state, 0.5, &angles).unwrap();
        let rz_on_terms = layer
            .gates
            .iter()
            .filter(|g| matches!(g, Gate::Rz { .. }))
            .count();
        // 6 term rotations + 2 constraint rotations.
        assert_eq!(rz_on_terms, 6 + state.basis.constraints.len());
    }

    #[test]
    fn driver_layer_without_groups_is_rx_only() {
        let p = plain_problem();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let layer = build_driver_layer(&ctx, &state, 0.3).unwrap();
        assert_eq!(layer.gates.len(), 6);
        assert!(layer.gates.iter().all(|g| matches!(g, Gate::Rx { .. })));
        assert_eq!(layer.depth(), 1);
    }

    #[test]
    fn driver_layer_groups_get_exchange_gates() {
        let p = HcboProblem {
            n_spins: 4,
            terms: vec![term(&[1, 2]), term(&[2, 3]), term(&[3, 4]), term(&[1, 4])],
            polynomial_constraints: vec![PolynomialConstraint {
                members: vec![
                    [1usize, 2].into_iter().collect(),
                    [2usize, 3].into_iter().collect(),
                    [3usize, 4].into_iter().collect(),
                ],
                value: 1,
                initial_bits: Some(vec![0, 0, 1]),
            }],
            ..Default::default()
        };
        p.validate().unwrap();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let layer = build_driver_layer(&ctx, &state, 0.3).unwrap();
        let n_exchange = layer
            .gates
            .iter()
            .filter(|g| matches!(g, Gate::Exchange { .. }))
            .count();
        assert!(n_exchange >= 2, "spanning pairs over a 3-member group");
        let n_rx = layer
            .gates
            .iter()
            .filter(|g| matches!(g, Gate::Rx { .. }))
            .count();
        assert_eq!(n_rx, 1, "only the non-member qubit mixes with rx");
    }

    #[test]
    fn zero_beta_driver_is_identity_rotations() {
        let p = plain_problem();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let layer = build_driver_layer(&ctx, &state, 0.0).unwrap();
        for g in &layer.gates {
            match g {
                Gate::Rx { angle, .. } => assert_eq!(*angle, 0.0),
                other => panic!("unexpected gate {other:?}"),
            }
        }
    }

    #[test]
    fn problem_layer_is_diagonal_and_commutes_with_constraints() {
        use crate::oracle::{circuit_unitary, constraint_target};
        let p = plain_problem();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();
        let angles = vec![0.7; state.basis.constraints.len()];
        let layer = build_problem_layer(&ctx, &state, 0.3, &angles).unwrap();
        let u = circuit_unitary(&layer, 6).unwrap();
        // Z-diagonal: every off-diagonal entry vanishes.
        for col in 0..u.dim() {
            for row in 0..u.dim() {
                if row != col {
                    assert!(u.get(row, col).norm() < 1e-9);
                }
            }
        }
        // Hence the layer commutes with every basis constraint operator.
        for c in &state.basis.constraints {
            let nodes: std::collections::BTreeSet<usize> = c
                .qubits
                .iter()
                .map(|&q| state.layout.node_of(q).unwrap())
                .collect();
            let target = constraint_target(&nodes, 6, 0.9, c.sign).unwrap();
            for i in 0..u.dim() {
                for j in 0..u.dim() {
                    let lhs = u.get(i, j) * target.get(j, j);
                    let rhs = target.get(i, i) * u.get(i, j);
                    assert!((lhs - rhs).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn assemble_layer_structure() {
        let p = plain_problem();
        let device = DeviceGraph::grid(3, 2).unwrap();
        let ctx = CompileContext::new(&p, &device);
        let basis = find_short_basis(&p, 4).unwrap();
        let state = initial_state(&ctx, &basis, None).unwrap();

        let sched = QaoaSchedule::uniform(1, 0.4, 0.2);
        let one = assemble(&ctx, &state, &sched).unwrap();
        let per_layer = one.circuit.gates.len();

        let zero = assemble(&ctx, &state, &QaoaSchedule::uniform(0, 0.0, 0.0)).unwrap();
        assert!(zero.circuit.gates.is_empty());
        assert!(!zero.prep.is_empty());

        let sched3 = QaoaSchedule {
            gammas: vec![0.1, 0.2, 0.3],
            betas: vec![0.4, 0.5, 0.6],
            constraint_angles: None,
        };
        let three = assemble(&ctx, &state, &sched3).unwrap();
        assert_eq!(three.circuit.gates.len(), 3 * per_layer);

        let bad = QaoaSchedule {
            gammas: vec![0.1],
            betas: vec![0.1, 0.2],
            constraint_angles: None,
        };
        assert!(assemble(&ctx, &state, &bad).is_err());
    }
}
