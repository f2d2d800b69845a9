//! Brute-force unitary oracle for desk-scale verification (≤ 12 qubits).
//!
//! Builds dense matrices for synthesized circuits and compares them against
//! the intended constraint operators up to global phase. Everything here is
//! deliberately independent of the synthesis path: gates are applied to
//! basis columns one by one.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::basis::ConstraintBasis;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::par;
use crate::problem::HcboProblem;

/// Hard cap on oracle size: 2^12 amplitudes per column keeps every check
/// comfortably below a second.
pub const MAX_ORACLE_QUBITS: usize = 12;

/// Dense 2^n × 2^n unitary, stored column-major.
#[derive(Clone, PartialEq)]
pub struct DenseUnitary {
    n_qubits: usize,
    dim: usize,
    /// entries[col * dim + row]
    entries: Vec<Complex64>,
}

impl DenseUnitary {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_cap(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::ONE;
        }
        Ok(DenseUnitary {
            n_qubits,
            dim,
            entries,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[col * self.dim + row]
    }

    fn from_columns(n_qubits: usize, columns: Vec<Vec<Complex64>>) -> Self {
        let dim = 1 << n_qubits;
        let mut entries = Vec::with_capacity(dim * dim);
        for col in columns {
            debug_assert_eq!(col.len(), dim);
            entries.extend(col);
        }
        DenseUnitary {
            n_qubits,
            dim,
            entries,
        }
    }

    /// Packs externally computed basis-state images into a matrix.
    pub fn from_column_vectors(n_qubits: usize, columns: Vec<Vec<Complex64>>) -> Result<Self> {
        check_cap(n_qubits)?;
        let dim = 1usize << n_qubits;
        if columns.len() != dim || columns.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: columns.len(),
            });
        }
        Ok(Self::from_columns(n_qubits, columns))
    }

    fn from_diagonal(n_qubits: usize, diag: &[Complex64]) -> Self {
        let dim = 1 << n_qubits;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        DenseUnitary {
            n_qubits,
            dim,
            entries,
        }
    }

    /// Max |(U†U - I)| entry; a full O(8^n) check, keep n small in tests.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = Complex64::ZERO;
                for k in 0..self.dim {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let expected = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                worst = worst.max((acc - expected).norm());
            }
        }
        worst
    }
}

impl std::fmt::Debug for DenseUnitary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DenseUnitary({} qubits)", self.n_qubits)
    }
}

fn check_cap(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_ORACLE_QUBITS {
        return Err(Error::ResourceCap(format!(
            "oracle supports at most {MAX_ORACLE_QUBITS} qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

/// Applies one gate to a state vector in place. Qubit index q addresses bit
/// q of the basis-state index.
pub fn apply_gate(state: &mut [Complex64], gate: &Gate, n_qubits: usize) {
    let dim = state.len();
    debug_assert_eq!(dim, 1 << n_qubits);
    match *gate {
        Gate::Cnot { control, target } => {
            let (cm, tm) = (1usize << control, 1usize << target);
            for i in 0..dim {
                if i & cm != 0 && i & tm == 0 {
                    state.swap(i, i | tm);
                }
            }
        }
        Gate::Rz { qubit, angle } => {
            let m = 1usize << qubit;
            let (p0, p1) = (
                Complex64::from_polar(1.0, -angle / 2.0),
                Complex64::from_polar(1.0, angle / 2.0),
            );
            for (i, amp) in state.iter_mut().enumerate() {
                *amp *= if i & m == 0 { p0 } else { p1 };
            }
        }
        Gate::Rx { qubit, angle } => {
            let m = 1usize << qubit;
            let c = Complex64::new((angle / 2.0).cos(), 0.0);
            let s = Complex64::new(0.0, -(angle / 2.0).sin());
            for i in 0..dim {
                if i & m == 0 {
                    let (a0, a1) = (state[i], state[i | m]);
                    state[i] = c * a0 + s * a1;
                    state[i | m] = s * a0 + c * a1;
                }
            }
        }
        Gate::Exchange { a, b, angle } => {
            // exp(iθ(σ₊σ₋ + σ₋σ₊)): rotation inside the |01⟩/|10⟩ subspace.
            let (am, bm) = (1usize << a, 1usize << b);
            let c = Complex64::new(angle.cos(), 0.0);
            let s = Complex64::new(0.0, angle.sin());
            for i in 0..dim {
                if i & am != 0 && i & bm == 0 {
                    let j = (i & !am) | bm;
                    let (ai, aj) = (state[i], state[j]);
                    state[i] = c * ai + s * aj;
                    state[j] = s * ai + c * aj;
                }
            }
        }
    }
}

/// Applies a whole circuit to a state vector in place.
pub fn apply_circuit(state: &mut [Complex64], circuit: &Circuit, n_qubits: usize) {
    for g in &circuit.gates {
        apply_gate(state, g, n_qubits);
    }
}

/// Dense unitary of a circuit, built by pushing each basis column through
/// the gate list. Columns evaluate in parallel.
pub fn circuit_unitary(circuit: &Circuit, n_qubits: usize) -> Result<DenseUnitary> {
    check_cap(n_qubits)?;
    for g in &circuit.gates {
        for q in g.qubits() {
            if q >= n_qubits {
                return Err(Error::Input(format!(
                    "gate acts on qubit {q}, circuit declared over {n_qubits}"
                )));
            }
        }
    }
    let dim = 1 << n_qubits;
    let columns = par::map_range(dim, |col| {
        let mut state = vec![Complex64::ZERO; dim];
        state[col] = Complex64::ONE;
        apply_circuit(&mut state, circuit, n_qubits);
        state
    });
    Ok(DenseUnitary::from_columns(n_qubits, columns))
}

/// Exact target operator exp(i · sign · angle · ∏_{q∈qubits} σz) ⊗ I.
pub fn constraint_target(
    qubits: &BTreeSet<usize>,
    n_qubits: usize,
    angle: f64,
    sign: i8,
) -> Result<DenseUnitary> {
    check_cap(n_qubits)?;
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::Input(format!("constraint qubit {q} out of range")));
        }
    }
    let dim = 1usize << n_qubits;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let diag: Vec<Complex64> = (0..dim)
        .map(|i| {
            let parity = (i & mask).count_ones() % 2;
            let z = if parity == 0 { 1.0 } else { -1.0 };
            Complex64::from_polar(1.0, f64::from(sign) * angle * z)
        })
        .collect();
    Ok(DenseUnitary::from_diagonal(n_qubits, &diag))
}

/// Diagonal of Σ_m σz^(m) over the given qubits (the polynomial-constraint
/// observable in the parity representation).
pub fn zsum_diagonal(members: &BTreeSet<usize>, n_qubits: usize) -> Vec<f64> {
    let dim = 1usize << n_qubits;
    (0..dim)
        .map(|i| {
            members
                .iter()
                .map(|&q| if i & (1 << q) == 0 { 1.0 } else { -1.0 })
                .sum()
        })
        .collect()
}

/// Max entry of the commutator [U, D] for a diagonal observable D.
pub fn commutator_with_diagonal(u: &DenseUnitary, diag: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for col in 0..u.dim {
        for row in 0..u.dim {
            let dev = (u.get(row, col) * (diag[col] - diag[row])).norm();
            worst = worst.max(dev);
        }
    }
    worst
}

/// Phase-insensitive equivalence: true iff some global phase φ brings every
/// entry of `b` within `tol` of `a`. The phase is read off the
/// largest-magnitude diagonal entry of b†a. Returns the max deviation too.
pub fn assert_equiv(a: &DenseUnitary, b: &DenseUnitary, tol: f64) -> Result<(bool, f64)> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let mut best = Complex64::ZERO;
    for j in 0..a.dim {
        let mut acc = Complex64::ZERO;
        for k in 0..a.dim {
            acc += b.get(k, j).conj() * a.get(k, j);
        }
        if acc.norm() > best.norm() {
            best = acc;
        }
    }
    let phase = if best.norm() > 1e-12 {
        Complex64::from_polar(1.0, best.arg())
    } else {
        Complex64::ONE
    };
    let mut worst = 0.0f64;
    for i in 0..a.entries.len() {
        worst = worst.max((a.entries[i] - phase * b.entries[i]).norm());
    }
    Ok((worst <= tol, worst))
}

/// Exhaustively checks that the basis is consistent with the code space:
/// for every logical assignment satisfying the product constraints, the
/// parity-qubit values (with ancilla values forced along their chains and
/// virtual qubits at their fixed signs) satisfy every basis constraint.
pub fn check_code_space(problem: &HcboProblem, basis: &ConstraintBasis) -> Result<bool> {
    if problem.n_spins > MAX_ORACLE_QUBITS {
        return Err(Error::ResourceCap(format!(
            "code-space check supports at most {MAX_ORACLE_QUBITS} spins, got {}",
            problem.n_spins
        )));
    }
    // Dimension bookkeeping: target dimension = columns − rank.
    let g = problem.generator_matrix();
    let target = problem.target_constraint_space();
    if target.rows() + g.rank() != g.cols() {
        return Ok(false);
    }

    let qubits = problem.parity_qubits();
    let n_cols = basis.total_cols();
    for s in 0u32..(1u32 << problem.n_spins) {
        let spin = |i: usize| -> i8 {
            if s & (1 << (i - 1)) == 0 {
                1
            } else {
                -1
            }
        };
        // Parity-qubit values; ancillas unresolved at first.
        let mut value: Vec<Option<i8>> = vec![None; n_cols];
        let mut satisfies_products = true;
        for q in &qubits {
            let v: i8 = q.label.iter().map(|&i| spin(i)).product();
            if let Some(fs) = q.fixed_sign {
                if v != fs {
                    satisfies_products = false;
                    break;
                }
            }
            value[q.id] = Some(v);
        }
        if !satisfies_products {
            continue;
        }
        // Force ancilla values: repeatedly solve constraints with exactly
        // one unknown member.
        loop {
            let mut progress = false;
            for c in &basis.constraints {
                let unknown: Vec<usize> = c
                    .qubits
                    .iter()
                    .copied()
                    .filter(|&q| value[q].is_none())
                    .collect();
                if unknown.len() == 1 {
                    let known: i8 = c
                        .qubits
                        .iter()
                        .filter(|&&q| q != unknown[0])
                        .map(|&q| value[q].unwrap())
                        .product();
                    value[unknown[0]] = Some(c.sign * known);
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        if value.iter().any(|v| v.is_none()) {
            return Ok(false);
        }
        for c in &basis.constraints {
            let prod: i8 = c.qubits.iter().map(|&q| value[q].unwrap()).product();
            if prod != c.sign {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
