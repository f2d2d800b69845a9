//! End-to-end compilation: parity mapping → short basis → layout search →
//! constraint synthesis → QAOA assembly, with a cost report, a SWAP baseline
//! for comparison, and oracle-backed verification of emitted circuits.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::find_short_basis;
use crate::circuit::{Circuit, Gate};
use crate::device::DeviceGraph;
use crate::error::{Error, Result};
use crate::layout::{
    folded_nodes, local_search, CompilationState, CompileContext, Cost, CostOrder, SearchOptions,
    SearchSummary, TraceEvent,
};
use crate::oracle;
use crate::problem::{fold_virtual_qubits, HcboProblem};
use crate::qaoa::{assemble, group_exchange_pairs, QaoaCircuit, QaoaSchedule};
use crate::qasm;
use crate::synth::{synth_constraint, synth_swap_baseline};

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub max_constraint_len: usize,
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
    pub cost_order: CostOrder,
    pub schedule: QaoaSchedule,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_constraint_len: 4,
            seed: 0,
            budget: 10_000,
            restarts: 8,
            cost_order: CostOrder::CnotFirst,
            schedule: QaoaSchedule::uniform(1, 0.5, 0.5),
        }
    }
}

/// Per-constraint cost line in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Parity-qubit ids of the basis row (virtual members included).
    pub qubits: Vec<usize>,
    pub sign: i8,
    /// Device nodes of the hardware members after folding.
    pub nodes: Vec<usize>,
    pub tree_size: usize,
    pub cnots: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Totals {
    pub cnots: usize,
    pub ancillas: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapBaselineReport {
    pub cnots: usize,
    pub per_constraint: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub totals: Totals,
    /// ASAP depth of all constraint circuits of one problem layer together.
    pub layer_depth: usize,
    pub constraints: Vec<ConstraintReport>,
    pub swap_baseline: SwapBaselineReport,
    pub optimization: SearchSummary,
}

pub struct CompileOutput {
    pub state: CompilationState,
    pub circuit: QaoaCircuit,
    pub report: Report,
    pub manifest: Manifest,
    pub trace: Vec<TraceEvent>,
}

/// Everything the verifier needs to reconstruct the intended operator:
/// placement, basis, schedule, and driver structure. Written alongside the
/// circuit file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Size of the emitted qubit register (max node id + 1).
    pub n_qreg: usize,
    /// Parity-qubit id → device node.
    pub assignment: BTreeMap<usize, usize>,
    pub basis: crate::basis::ConstraintBasis,
    pub schedule: QaoaSchedule,
    /// Hardware-adjacent exchange pairs per polynomial group, as node pairs.
    pub exchange_pairs: Vec<Vec<(usize, usize)>>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("layout file: {e}")))
    }
}

pub fn compile(
    problem: &HcboProblem,
    device: &DeviceGraph,
    opts: &CompileOptions,
) -> Result<CompileOutput> {
    problem.validate()?;
    let basis = find_short_basis(problem, opts.max_constraint_len)?;
    let ctx = CompileContext::new(problem, device);
    let search = SearchOptions {
        seed: opts.seed,
        budget: opts.budget,
        restarts: opts.restarts,
        cost_order: opts.cost_order,
    };
    let (state, trace, summary) = local_search(&ctx, &basis, &search)?;
    let circuit = assemble(&ctx, &state, &opts.schedule)?;
    let report = build_report(&ctx, &state, opts.seed, summary)?;
    let exchange_pairs = ctx
        .groups
        .iter()
        .map(|g| group_exchange_pairs(&ctx, &state, g))
        .collect::<Result<Vec<_>>>()?;
    let n_qreg = state
        .layout
        .iter()
        .map(|(_, n)| n + 1)
        .max()
        .unwrap_or(0)
        .max(1);
    let manifest = Manifest {
        n_qreg,
        assignment: state.layout.iter().collect(),
        basis: state.basis.clone(),
        schedule: opts.schedule.clone(),
        exchange_pairs,
    };
    Ok(CompileOutput {
        state,
        circuit,
        report,
        manifest,
        trace,
    })
}

fn build_report(
    ctx: &CompileContext,
    state: &CompilationState,
    seed: u64,
    optimization: SearchSummary,
) -> Result<Report> {
    let mut constraints = Vec::new();
    let mut baseline_per = Vec::new();
    let mut total_cnots = 0;
    let mut baseline_total = 0;
    for (c, tree) in state.basis.constraints.iter().zip(&state.trees) {
        let nodes = folded_nodes(ctx, &state.layout, c)?;
        let (cnots, depth) = if nodes.is_empty() {
            (0, 0)
        } else {
            let circ = synth_constraint(tree, &nodes, 1.0)?;
            (circ.cnot_count(), circ.depth())
        };
        let baseline = if nodes.is_empty() {
            0
        } else {
            synth_swap_baseline(ctx.device, &nodes, 1.0)?.cnot_count()
        };
        total_cnots += cnots;
        baseline_total += baseline;
        baseline_per.push(baseline);
        constraints.push(ConstraintReport {
            qubits: c.qubits.iter().copied().collect(),
            sign: c.sign,
            nodes: nodes.into_iter().collect(),
            tree_size: tree.size(),
            cnots,
            depth,
        });
    }
    Ok(Report {
        seed,
        totals: Totals {
            cnots: total_cnots,
            ancillas: state.basis.ancillas.len(),
        },
        layer_depth: state.cost.depth,
        constraints,
        swap_baseline: SwapBaselineReport {
            cnots: baseline_total,
            per_constraint: baseline_per,
        },
        optimization,
    })
}

/// Sanity accessor used by tests and the CLI: the search cost must agree
/// with the per-constraint sums in the report.
pub fn report_consistent(report: &Report, cost: Cost) -> bool {
    let sum: usize = report.constraints.iter().map(|c| c.cnots).sum();
    sum == report.totals.cnots && cost.cnots == sum
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub equivalent: bool,
    pub max_deviation: f64,
    pub code_space_ok: bool,
    pub n_qubits_checked: usize,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.equivalent && self.code_space_ok
    }
}

/// One layer of the intended operator, applied to a state vector: diagonal
/// term rotations, analytic constraint phases (independent of the CNOT
/// synthesis under test), then the documented driver gate pass.
struct ExpectedLayer {
    term_rotations: Vec<Gate>,
    /// (bit mask over dense qubits, sign·angle) per constraint.
    constraint_phases: Vec<(usize, f64)>,
    driver: Vec<Gate>,
}

impl ExpectedLayer {
    fn apply(&self, state: &mut [Complex64], n: usize) {
        for g in &self.term_rotations {
            oracle::apply_gate(state, g, n);
        }
        for &(mask, angle) in &self.constraint_phases {
            for (i, amp) in state.iter_mut().enumerate() {
                let z = if (i & mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                *amp *= Complex64::from_polar(1.0, angle * z);
            }
        }
        for g in &self.driver {
            oracle::apply_gate(state, g, n);
        }
    }
}

/// Verifies an emitted circuit file against the intended operator rebuilt
/// from the problem and the compilation manifest: constraint rotations are
/// compared to their exact diagonal targets, term and driver rotations to
/// the documented conventions, all up to one global phase at `tol`. Also
/// runs the exhaustive code-space check.
pub fn verify_emitted(
    problem: &HcboProblem,
    manifest: &Manifest,
    qasm_text: &str,
    tol: f64,
) -> Result<VerifyOutcome> {
    problem.validate()?;
    let (parsed, n_qreg) = qasm::parse(qasm_text)?;

    // Dense relabeling of every node the circuit or the layout touches.
    let mut used: BTreeSet<usize> = manifest.assignment.values().copied().collect();
    for g in &parsed.gates {
        used.extend(g.qubits());
    }
    for q in &used {
        if *q >= n_qreg {
            return Err(Error::Input(format!(
                "gate uses q[{q}] beyond qreg {n_qreg}"
            )));
        }
    }
    let n = used.len();
    if n > oracle::MAX_ORACLE_QUBITS {
        return Err(Error::ResourceCap(format!(
            "{n} active qubits exceed the verification cap of {}",
            oracle::MAX_ORACLE_QUBITS
        )));
    }
    let dense: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let remap = |q: usize| dense[&q];

    let qubits = problem.parity_qubits();
    let node_of = |id: usize| -> Result<usize> {
        manifest
            .assignment
            .get(&id)
            .copied()
            .ok_or(Error::UnknownId(id))
    };

    manifest
        .schedule
        .validate(manifest.basis.constraints.len())?;
    let mut layers = Vec::new();
    for layer in 0..manifest.schedule.layers() {
        let gamma = manifest.schedule.gammas[layer];
        let beta = manifest.schedule.betas[layer];
        let mut term_rotations = Vec::new();
        for (k, t) in problem.terms.iter().enumerate() {
            term_rotations.push(Gate::Rz {
                qubit: remap(node_of(k)?),
                angle: -2.0 * gamma * t.coefficient,
            });
        }
        let mut constraint_phases = Vec::new();
        for (ci, c) in manifest.basis.constraints.iter().enumerate() {
            let folded = fold_virtual_qubits(c, &qubits);
            if folded.qubits.is_empty() {
                continue;
            }
            let mut mask = 0usize;
            for &q in &folded.qubits {
                mask |= 1 << remap(node_of(q)?);
            }
            let angle = manifest
                .schedule
                .constraint_angles
                .as_ref()
                .map(|a| a[layer][ci])
                .unwrap_or(gamma);
            constraint_phases.push((mask, f64::from(folded.sign) * angle));
        }
        let in_group: BTreeSet<usize> = problem
            .polynomial_groups()
            .iter()
            .flatten()
            .copied()
            .collect();
        let mut driver = Vec::new();
        for (&q, &node) in &manifest.assignment {
            if !in_group.contains(&q) {
                driver.push(Gate::Rx {
                    qubit: remap(node),
                    angle: -2.0 * beta,
                });
            }
        }
        for pairs in &manifest.exchange_pairs {
            for &(a, b) in pairs {
                driver.push(Gate::Exchange {
                    a: remap(a),
                    b: remap(b),
                    angle: beta,
                });
            }
        }
        layers.push(ExpectedLayer {
            term_rotations,
            constraint_phases,
            driver,
        });
    }

    // Column-by-column: expected operator vs parsed circuit.
    let dim = 1usize << n;
    let remapped_gates: Vec<Gate> = parsed
        .gates
        .iter()
        .map(|g| match *g {
            Gate::Cnot { control, target } => Gate::Cnot {
                control: remap(control),
                target: remap(target),
            },
            Gate::Rz { qubit, angle } => Gate::Rz {
                qubit: remap(qubit),
                angle,
            },
            Gate::Rx { qubit, angle } => Gate::Rx {
                qubit: remap(qubit),
                angle,
            },
            Gate::Exchange { a, b, angle } => Gate::Exchange {
                a: remap(a),
                b: remap(b),
                angle,
            },
        })
        .collect();
    let parsed_dense = Circuit {
        gates: remapped_gates,
    };
    let got = oracle::circuit_unitary(&parsed_dense, n)?;
    let expected_columns = crate::par::map_range(dim, |col| {
        let mut state = vec![Complex64::ZERO; dim];
        state[col] = Complex64::ONE;
        for layer in &layers {
            layer.apply(&mut state, n);
        }
        state
    });
    // Reuse the diagonal-phase equivalence machinery by packing the
    // expected columns into a circuit-independent unitary.
    let expected = oracle::DenseUnitary::from_column_vectors(n, expected_columns)?;
    let (equivalent, max_deviation) = oracle::assert_equiv(&got, &expected, tol)?;
    let code_space_ok = oracle::check_code_space(problem, &manifest.basis)?;
    Ok(VerifyOutcome {
        equivalent,
        max_deviation,
        code_space_ok,
        n_qubits_checked: n,
    })
}
