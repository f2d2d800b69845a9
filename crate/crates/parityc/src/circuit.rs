//! Gate list and greedy ASAP scheduling.
//!
//! Depth and CNOT count are always recomputed from the gate list, never
//! cached, so they cannot go stale across circuit edits.

use serde::{Deserialize, Serialize};

/// A single gate. Qubit indices refer to device nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Cnot {
        control: usize,
        target: usize,
    },
    Rz {
        qubit: usize,
        angle: f64,
    },
    Rx {
        qubit: usize,
        angle: f64,
    },
    /// XY-type exchange exp(iθ(σ₊σ₋ + σ₋σ₊)) between two qubits.
    Exchange {
        a: usize,
        b: usize,
        angle: f64,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Rz { qubit, .. } | Gate::Rx { qubit, .. } => vec![qubit],
            Gate::Exchange { a, b, .. } => vec![a, b],
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit { gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: &Circuit) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    /// Greedy as-soon-as-possible schedule: each gate starts one step after
    /// the latest gate sharing a qubit, preserving per-qubit gate order.
    /// Returns one 1-based time step per gate.
    pub fn schedule(&self) -> Vec<usize> {
        let mut busy_until: std::collections::HashMap<usize, usize> = Default::default();
        let mut steps = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let start = g
                .qubits()
                .iter()
                .map(|q| busy_until.get(q).copied().unwrap_or(0))
                .max()
                .unwrap_or(0)
                + 1;
            for q in g.qubits() {
                busy_until.insert(q, start);
            }
            steps.push(start);
        }
        steps
    }

    /// Number of time steps under ASAP scheduling (0 for an empty circuit).
    pub fn depth(&self) -> usize {
        self.schedule().into_iter().max().unwrap_or(0)
    }

    /// Depth counting only CNOT steps (single-qubit rotations scheduled for
    /// free). This is the figure of merit the gate-count/depth bounds for
    /// constraint circuits are stated in.
    pub fn cnot_depth(&self) -> usize {
        let cnots = Circuit {
            gates: self.gates.iter().filter(|g| g.is_cnot()).cloned().collect(),
        };
        cnots.depth()
    }
}
