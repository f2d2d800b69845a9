//! Problem model: higher-order constrained binary optimization (HCBO)
//! instances, the parity qubits they map to, and the generator matrix whose
//! nullspace is the target constraint space.
//!
//! Each Hamiltonian term becomes one parity qubit labeled by the term's
//! logical spin indices. Product-form side conditions become extra *virtual*
//! columns of the generator matrix: they carry a fixed sign, are never placed
//! on hardware, and get folded out of any constraint that uses them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::basis::Constraint;
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// One term of the problem Hamiltonian: a product of σz on `spins` weighted
/// by `coefficient`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalTerm {
    pub spins: BTreeSet<usize>,
    pub coefficient: f64,
}

/// Side condition fixing a σz-product to ±1. Folded into the parity check
/// matrix as an extra generator column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductConstraint {
    pub spins: BTreeSet<usize>,
    pub sign: i8,
}

/// Side condition on a *sum* of σz-products, enforced by an exchange driver
/// on hardware-adjacent parity qubits rather than by the parity check matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialConstraint {
    /// Spin-index sets naming the member parity qubits; each must match a term.
    pub members: Vec<BTreeSet<usize>>,
    /// Target value of the sum on valid states.
    pub value: i64,
    /// Optional initial bit per member (0 ↦ σz = +1) satisfying the
    /// constraint; emitted as a preparation directive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_bits: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HcboProblem {
    pub n_spins: usize,
    pub terms: Vec<LogicalTerm>,
    #[serde(default)]
    pub product_constraints: Vec<ProductConstraint>,
    #[serde(default)]
    pub polynomial_constraints: Vec<PolynomialConstraint>,
}

/// A physical (or virtual) qubit of the parity mapping.
///
/// Non-ancilla qubits are labeled by the logical spins whose parity they
/// hold. Ancillas have empty labels and a unique pseudo-index instead.
/// `fixed_sign` is set only for product-constraint virtual qubits, which are
/// never placed on hardware.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityQubit {
    pub id: usize,
    pub label: BTreeSet<usize>,
    pub is_ancilla: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_sign: Option<i8>,
}

impl ParityQubit {
    pub fn is_virtual(&self) -> bool {
        self.fixed_sign.is_some()
    }

    /// Index set used for parity-validity checks: the label for real qubits,
    /// a fresh pseudo-index (above the logical range) for ancillas.
    pub fn parity_indices(&self, n_spins: usize) -> BTreeSet<usize> {
        if self.is_ancilla {
            BTreeSet::from([n_spins + 1 + self.id])
        } else {
            self.label.clone()
        }
    }
}

impl HcboProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: HcboProblem =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("problem file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.terms {
            if t.spins.is_empty() {
                return Err(Error::Input("term with empty spin set".into()));
            }
            for &s in &t.spins {
                if s == 0 || s > self.n_spins {
                    return Err(Error::Input(format!(
                        "spin index {s} out of range 1..={}",
                        self.n_spins
                    )));
                }
            }
            if !seen.insert(t.spins.clone()) {
                return Err(Error::Input(format!(
                    "duplicate term {:?}; merge coefficients in the input",
                    t.spins
                )));
            }
        }
        let term_sets: BTreeSet<_> = self.terms.iter().map(|t| t.spins.clone()).collect();
        let mut seen_products = BTreeSet::new();
        for pc in &self.product_constraints {
            if pc.spins.is_empty() {
                return Err(Error::Input(
                    "product constraint with empty spin set".into(),
                ));
            }
            for &s in &pc.spins {
                if s == 0 || s > self.n_spins {
                    return Err(Error::Input(format!("spin index {s} out of range")));
                }
            }
            if pc.sign != 1 && pc.sign != -1 {
                return Err(Error::Input(
                    "product constraint sign must be +1 or -1".into(),
                ));
            }
            if term_sets.contains(&pc.spins) {
                return Err(Error::Input(format!(
                    "product constraint {:?} duplicates a term",
                    pc.spins
                )));
            }
            if !seen_products.insert(pc.spins.clone()) {
                return Err(Error::Input(format!(
                    "duplicate product constraint {:?}",
                    pc.spins
                )));
            }
        }
        for (gi, pc) in self.polynomial_constraints.iter().enumerate() {
            if pc.members.is_empty() {
                return Err(Error::Input(format!(
                    "polynomial constraint {gi} has no members"
                )));
            }
            for m in &pc.members {
                if !term_sets.contains(m) {
                    return Err(Error::Input(format!(
                        "polynomial constraint member {m:?} does not name a term"
                    )));
                }
            }
            if let Some(bits) = &pc.initial_bits {
                if bits.len() != pc.members.len() {
                    return Err(Error::Input(format!(
                        "polynomial constraint {gi}: initial_bits length {} != member count {}",
                        bits.len(),
                        pc.members.len()
                    )));
                }
                let sum: i64 = bits.iter().map(|&b| if b == 0 { 1i64 } else { -1 }).sum();
                if sum != pc.value {
                    return Err(Error::Input(format!(
                        "polynomial constraint {gi}: initial_bits evaluate to {sum}, want {}",
                        pc.value
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of Hamiltonian terms K (hardware parity qubits before ancillas).
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// All parity qubits in column order: term qubits 0..K, then one virtual
    /// qubit per product constraint.
    pub fn parity_qubits(&self) -> Vec<ParityQubit> {
        let mut out = Vec::with_capacity(self.terms.len() + self.product_constraints.len());
        for (i, t) in self.terms.iter().enumerate() {
            out.push(ParityQubit {
                id: i,
                label: t.spins.clone(),
                is_ancilla: false,
                fixed_sign: None,
            });
        }
        for (j, pc) in self.product_constraints.iter().enumerate() {
            out.push(ParityQubit {
                id: self.terms.len() + j,
                label: pc.spins.clone(),
                is_ancilla: false,
                fixed_sign: Some(pc.sign),
            });
        }
        out
    }

    /// Parity-qubit id of the member set of a polynomial constraint.
    pub fn qubit_of_members(&self) -> BTreeMap<BTreeSet<usize>, usize> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.spins.clone(), i))
            .collect()
    }

    /// Member qubit ids per polynomial constraint, in input order.
    pub fn polynomial_groups(&self) -> Vec<Vec<usize>> {
        let by_set = self.qubit_of_members();
        self.polynomial_constraints
            .iter()
            .map(|pc| pc.members.iter().map(|m| by_set[m]).collect())
            .collect()
    }

    /// N × (K + #product constraints) incidence matrix: column j has a 1 in
    /// row i iff spin i+1 occurs in term (or product constraint) j.
    pub fn generator_matrix(&self) -> BitMatrix {
        let k = self.terms.len() + self.product_constraints.len();
        let mut g = BitMatrix::zeros(self.n_spins, k);
        let columns = self
            .terms
            .iter()
            .map(|t| &t.spins)
            .chain(self.product_constraints.iter().map(|pc| &pc.spins));
        for (j, spins) in columns.enumerate() {
            for &s in spins {
                g.set(s - 1, j, true);
            }
        }
        g
    }

    /// Canonical basis of the target constraint space: the nullspace of the
    /// generator matrix, over term columns plus virtual columns.
    pub fn target_constraint_space(&self) -> BitMatrix {
        self.generator_matrix().nullspace_basis()
    }
}

/// Removes virtual qubits from a constraint, multiplying its sign by each
/// removed qubit's fixed sign.
pub fn fold_virtual_qubits(c: &Constraint, qubits: &[ParityQubit]) -> Constraint {
    let mut folded = BTreeSet::new();
    let mut sign = c.sign;
    for &q in &c.qubits {
        match qubits.iter().find(|pq| pq.id == q) {
            Some(pq) if pq.is_virtual() => sign *= pq.fixed_sign.unwrap_or(1),
            _ => {
                folded.insert(q);
            }
        }
    }
    Constraint {
        qubits: folded,
        sign,
    }
}
