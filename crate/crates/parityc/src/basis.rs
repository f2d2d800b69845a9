//! Search for a basis of short parity constraints spanning the target
//! constraint space, breaking long constraints with ancilla qubits when no
//! short decomposition exists.
//!
//! A constraint is valid iff every logical index occurs an even number of
//! times across the labels of its qubits. Ancillas carry a fresh pseudo-index
//! so the same rule applies to them: an ancilla is only ever balanced by the
//! other constraint of its chain, never within a single constraint.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, RowSpace};
use crate::par;
use crate::problem::{HcboProblem, ParityQubit};

/// A set of parity-qubit ids whose σz-product is fixed to `sign`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub qubits: BTreeSet<usize>,
    pub sign: i8,
}

impl Constraint {
    pub fn new(qubits: impl IntoIterator<Item = usize>, sign: i8) -> Self {
        Constraint {
            qubits: qubits.into_iter().collect(),
            sign,
        }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Row vector over `cols` qubit columns (column index = qubit id).
    pub fn to_row(&self, cols: usize) -> BitMatrix {
        BitMatrix::row_from_support(cols, self.qubits.iter().copied())
    }
}

/// A spanning set of short constraints plus the ancillas introduced to break
/// long ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintBasis {
    pub constraints: Vec<Constraint>,
    pub ancillas: Vec<ParityQubit>,
    /// Columns of the original problem (term qubits + virtual qubits);
    /// ancilla ids continue from here.
    pub n_problem_cols: usize,
}

impl ConstraintBasis {
    pub fn total_cols(&self) -> usize {
        self.n_problem_cols + self.ancillas.len()
    }

    pub fn to_matrix(&self) -> BitMatrix {
        let cols = self.total_cols();
        let mut m = BitMatrix::zeros(self.constraints.len(), cols);
        for (r, c) in self.constraints.iter().enumerate() {
            for &q in &c.qubits {
                m.set(r, q, true);
            }
        }
        m
    }

    /// Row space over problem columns after eliminating ancilla columns:
    /// combinations of basis rows with zero ancilla support, projected onto
    /// the problem columns. For a correct basis this equals the target
    /// constraint space.
    pub fn ancilla_eliminated_space(&self) -> BitMatrix {
        let m = self.to_matrix();
        let n_anc = self.ancillas.len();
        // Order ancilla columns first so RREF pivots land on them.
        let mut order: Vec<usize> = (self.n_problem_cols..self.total_cols()).collect();
        order.extend(0..self.n_problem_cols);
        let permuted = m.select_columns(&order);
        let (rref, pivots) = permuted.row_reduce();
        let keep: Vec<usize> = (0..pivots.len()).filter(|&r| pivots[r] >= n_anc).collect();
        let mut out = BitMatrix::zeros(keep.len(), self.n_problem_cols);
        for (i, &r) in keep.iter().enumerate() {
            for c in rref.row_support(r) {
                debug_assert!(c >= n_anc);
                out.set(i, c - n_anc, true);
            }
        }
        out.canonical_row_space()
    }
}

/// Lookup table from qubit ids to parity-index masks (labels for real
/// qubits, pseudo-indices for ancillas).
pub struct QubitTable<'a> {
    qubits: &'a [ParityQubit],
    masks: Vec<BitMatrix>,
    mask_cols: usize,
}

impl<'a> QubitTable<'a> {
    pub fn new(qubits: &'a [ParityQubit], n_spins: usize) -> Self {
        let max_id = qubits.iter().map(|q| q.id).max().unwrap_or(0);
        let mask_cols = n_spins + 2 + max_id;
        let masks = qubits
            .iter()
            .map(|q| {
                BitMatrix::row_from_support(
                    mask_cols,
                    q.parity_indices(n_spins).into_iter().map(|i| i - 1),
                )
            })
            .collect();
        QubitTable {
            qubits,
            masks,
            mask_cols,
        }
    }

    fn index_of(&self, id: usize) -> Option<usize> {
        self.qubits.iter().position(|q| q.id == id)
    }

    fn xor_of(&self, ids: impl IntoIterator<Item = usize>) -> Result<BitMatrix> {
        let mut acc = BitMatrix::zeros(1, self.mask_cols);
        for id in ids {
            let idx = self.index_of(id).ok_or(Error::UnknownId(id))?;
            acc.xor_row_from(0, &self.masks[idx], 0);
        }
        Ok(acc)
    }
}

/// Whether the σz-product over `qubits` is the identity on the code space:
/// every logical index (and ancilla pseudo-index) appears an even number of
/// times across the labels.
pub fn is_valid_constraint(qubits: &BTreeSet<usize>, table: &QubitTable) -> Result<bool> {
    Ok(table.xor_of(qubits.iter().copied())?.is_zero())
}

/// Expresses a label-mask as a combination of virtual-qubit labels, tracking
/// which virtual qubits participate.
struct VirtualCompleter {
    /// RREF of virtual labels, augmented with combination bookkeeping.
    rows: Vec<(BitMatrix, Vec<usize>)>,
    pivots: Vec<usize>,
}

impl VirtualCompleter {
    fn new(table: &QubitTable) -> Self {
        let mut c = VirtualCompleter {
            rows: Vec::new(),
            pivots: Vec::new(),
        };
        for (idx, q) in table.qubits.iter().enumerate() {
            if !q.is_virtual() {
                continue;
            }
            let mut row = table.masks[idx].clone();
            let mut combo = vec![q.id];
            for (i, &p) in c.pivots.iter().enumerate() {
                if row.get(0, p) {
                    row.xor_row_from(0, &c.rows[i].0, 0);
                    combo = symmetric_difference(&combo, &c.rows[i].1);
                }
            }
            if let Some(&pivot) = row.row_support(0).first() {
                let pos = c.pivots.partition_point(|&p| p < pivot);
                c.pivots.insert(pos, pivot);
                c.rows.insert(pos, (row, combo));
            }
            // Dependent virtual labels are dropped here; their sign
            // consistency is checked separately in find_short_basis.
        }
        c
    }

    /// Virtual qubit ids whose labels XOR to `mask`, if any.
    fn complete(&self, mask: &BitMatrix) -> Option<Vec<usize>> {
        let mut rem = mask.clone();
        let mut combo: Vec<usize> = Vec::new();
        for (i, &p) in self.pivots.iter().enumerate() {
            if rem.get(0, p) {
                rem.xor_row_from(0, &self.rows[i].0, 0);
                combo = symmetric_difference(&combo, &self.rows[i].1);
            }
        }
        rem.is_zero().then_some(combo)
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let sa: BTreeSet<usize> = a.iter().copied().collect();
    let sb: BTreeSet<usize> = b.iter().copied().collect();
    sa.symmetric_difference(&sb).copied().collect()
}

/// Number of hardware qubits in a constraint (virtual members excluded).
pub fn physical_len(c: &Constraint, qubits: &[ParityQubit]) -> usize {
    c.qubits
        .iter()
        .filter(|&&id| {
            qubits
                .iter()
                .find(|q| q.id == id)
                .is_none_or(|q| !q.is_virtual())
        })
        .count()
}

/// All valid constraints over at most `max_len` hardware qubits, in
/// deterministic order (by hardware length, then by qubit-id tuple).
///
/// Subsets of hardware qubits are enumerated directly; a subset whose parity
/// does not cancel on its own is completed with virtual qubits when their
/// fixed products can absorb the remainder, which is how product constraints
/// shorten physical constraints.
pub fn enumerate_short_constraints(
    qubits: &[ParityQubit],
    n_spins: usize,
    max_len: usize,
) -> Result<Vec<Constraint>> {
    if max_len < 2 {
        return Err(Error::Input(
            "max constraint length must be at least 2".into(),
        ));
    }
    let table = QubitTable::new(qubits, n_spins);
    let completer = VirtualCompleter::new(&table);
    let hardware: Vec<usize> = qubits
        .iter()
        .filter(|q| !q.is_virtual() && !q.is_ancilla)
        .map(|q| q.id)
        .collect();

    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for len in 1..=max_len.min(hardware.len()) {
        combinations(&hardware, len, &mut subsets);
    }

    let checked = par::map_slice(&subsets, |subset| {
        let mask = table
            .xor_of(subset.iter().copied())
            .expect("hardware ids are known");
        let virtuals = completer.complete(&mask)?;
        if subset.len() + virtuals.len() < 2 {
            return None;
        }
        let mut ids = subset.clone();
        ids.extend(virtuals);
        Some(Constraint::new(ids, 1))
    });

    let mut out: Vec<Constraint> = checked.into_iter().flatten().collect();
    out.sort_by_key(|c| {
        (
            physical_len(c, qubits),
            c.qubits.iter().copied().collect::<Vec<_>>(),
        )
    });
    Ok(out)
}

/// Appends all `len`-subsets of `items` (which must be sorted) to `out` in
/// lexicographic order.
fn combinations(items: &[usize], len: usize, out: &mut Vec<Vec<usize>>) {
    if len > items.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..len).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // Advance the rightmost index that can still move.
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + items.len() - len {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..len {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Greedily grows a linearly independent subset of `candidates` inside the
/// target space. Returns the picked constraints and a canonical basis of the
/// part of the target space they do not span.
pub fn grow_short_basis(
    target: &BitMatrix,
    candidates: &[Constraint],
) -> (Vec<Constraint>, BitMatrix) {
    let cols = target.cols();
    let target_space = RowSpace::from_matrix(target);
    let mut picked_space = RowSpace::new(cols);
    let mut picked = Vec::new();
    for c in candidates {
        if picked_space.rank() == target_space.rank() {
            break;
        }
        let row = c.to_row(cols);
        if target_space.contains(&row) && picked_space.insert(&row) {
            picked.push(c.clone());
        }
    }
    let mut uncovered_rows = BitMatrix::zeros(0, cols);
    for r in 0..target.rows() {
        let rem = picked_space.reduce(&target.row(r));
        if !rem.is_zero() {
            uncovered_rows = uncovered_rows.stack(&rem).expect("same width");
        }
    }
    (picked, uncovered_rows.canonical_row_space())
}

/// Splits a constraint longer than `max_len` hardware qubits into a chain of
/// chunks joined by fresh ancillas. Consecutive chunks share one ancilla, so
/// adding all chunk rows and cancelling ancillas recovers the original
/// constraint. Virtual members ride along on the first chunk (they cost no
/// hardware).
///
/// `order` optionally fixes the traversal order of the hardware qubits (e.g.
/// by physical position); defaults to ascending id.
pub fn break_long_constraint(
    c: &Constraint,
    virtual_ids: &BTreeSet<usize>,
    max_len: usize,
    next_ancilla_id: usize,
    order: Option<&[usize]>,
) -> Result<(Vec<Constraint>, Vec<ParityQubit>)> {
    let mut hardware: Vec<usize> = c
        .qubits
        .iter()
        .copied()
        .filter(|q| !virtual_ids.contains(q))
        .collect();
    if let Some(order) = order {
        hardware.sort_by_key(|q| order.iter().position(|o| o == q).unwrap_or(usize::MAX));
    }
    let carried: Vec<usize> = c
        .qubits
        .iter()
        .copied()
        .filter(|q| virtual_ids.contains(q))
        .collect();

    if hardware.len() <= max_len {
        return Ok((vec![c.clone()], vec![]));
    }
    if max_len < 3 {
        return Err(Error::Input(
            "breaking a long constraint requires max length >= 3".into(),
        ));
    }

    let mut chunks = Vec::new();
    let mut ancillas = Vec::new();
    let mut carry: Option<usize> = None;
    let mut i = 0;
    loop {
        let avail = max_len - usize::from(carry.is_some());
        let rest = hardware.len() - i;
        let mut members: Vec<usize> = carry.into_iter().collect();
        if rest <= avail {
            members.extend_from_slice(&hardware[i..]);
            let sign = if chunks.is_empty() { c.sign } else { 1 };
            let mut chunk = Constraint::new(members, sign);
            if chunks.is_empty() {
                chunk.qubits.extend(carried.iter().copied());
            }
            chunks.push(chunk);
            break;
        }
        members.extend_from_slice(&hardware[i..i + avail - 1]);
        i += avail - 1;
        let ancilla_id = next_ancilla_id + ancillas.len();
        ancillas.push(ParityQubit {
            id: ancilla_id,
            label: BTreeSet::new(),
            is_ancilla: true,
            fixed_sign: None,
        });
        members.push(ancilla_id);
        let sign = if chunks.is_empty() { c.sign } else { 1 };
        let mut chunk = Constraint::new(members, sign);
        if chunks.is_empty() {
            chunk.qubits.extend(carried.iter().copied());
        }
        chunks.push(chunk);
        carry = Some(ancilla_id);
    }
    Ok((chunks, ancillas))
}

/// Full basis construction: enumerate short candidates, grow a basis, then
/// break whatever part of the target space remains uncovered.
pub fn find_short_basis(problem: &HcboProblem, max_len: usize) -> Result<ConstraintBasis> {
    let qubits = problem.parity_qubits();
    let n_cols = qubits.len();
    let target = problem.target_constraint_space();
    let virtual_ids: BTreeSet<usize> = qubits
        .iter()
        .filter(|q| q.is_virtual())
        .map(|q| q.id)
        .collect();

    // Rows supported entirely on virtual columns are consistency conditions
    // among the product constraints themselves: nothing to implement, but
    // the fixed signs must multiply to +1.
    let mut implementable = BitMatrix::zeros(0, n_cols);
    for r in 0..target.rows() {
        let support = target.row_support(r);
        if support.iter().all(|c| virtual_ids.contains(c)) {
            let sign: i8 = support
                .iter()
                .map(|&c| {
                    qubits
                        .iter()
                        .find(|q| q.id == c)
                        .and_then(|q| q.fixed_sign)
                        .unwrap_or(1)
                })
                .product();
            if sign != 1 {
                return Err(Error::Infeasible(
                    "product constraints are mutually inconsistent".into(),
                ));
            }
        } else {
            implementable = implementable.stack(&target.row(r))?;
        }
    }

    let candidates = enumerate_short_constraints(&qubits, problem.n_spins, max_len)?;
    let (mut constraints, uncovered) = grow_short_basis(&implementable, &candidates);

    let mut ancillas = Vec::new();
    for r in 0..uncovered.rows() {
        let long = Constraint::new(uncovered.row_support(r), 1);
        let (chunks, new_ancillas) =
            break_long_constraint(&long, &virtual_ids, max_len, n_cols + ancillas.len(), None)?;
        constraints.extend(chunks);
        ancillas.extend(new_ancillas);
    }

    Ok(ConstraintBasis {
        constraints,
        ancillas,
        n_problem_cols: n_cols,
    })
}
