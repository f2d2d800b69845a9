//! Dense linear algebra over GF(2).
//!
//! A [`BitMatrix`] stores one bit per entry, packed into 64-bit words per
//! row. Everything the parity mapping needs — row reduction, rank, nullspace
//! bases and row-space membership — lives here. Sizes are tens of columns,
//! so dense storage wins over any sparse indexing.

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Dense matrix over GF(2) with row-major bit-packed storage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD_BITS).max(1);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows given as 0/1 slices. All rows must share
    /// one length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b % 2 == 1);
            }
        }
        Ok(m)
    }

    /// Builds a single-row matrix from the support (set bit positions).
    pub fn row_from_support(cols: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::zeros(1, cols);
        for j in support {
            m.set(0, j, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let w = self.bits[r * self.words_per_row + c / WORD_BITS];
        (w >> (c % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.bits[r * self.words_per_row + c / WORD_BITS];
        if value {
            *w |= 1 << (c % WORD_BITS);
        } else {
            *w &= !(1 << (c % WORD_BITS));
        }
    }

    /// XORs row `src` into row `dst`.
    pub fn xor_rows(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.words_per_row, src * self.words_per_row);
        for k in 0..self.words_per_row {
            let v = self.bits[s + k];
            self.bits[d + k] ^= v;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.words_per_row {
            self.bits
                .swap(a * self.words_per_row + k, b * self.words_per_row + k);
        }
    }

    pub fn row_is_zero(&self, r: usize) -> bool {
        self.row_words(r).iter().all(|&w| w == 0)
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Column indices of the set bits in row `r`, ascending.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, &w) in self.row_words(r).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(k * WORD_BITS + b);
                w &= w - 1;
            }
        }
        out
    }

    /// Appends the rows of `other` below `self`. Column counts must match.
    pub fn stack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut m = BitMatrix::zeros(self.rows + other.rows, self.cols);
        m.bits[..self.bits.len()].copy_from_slice(&self.bits);
        m.bits[self.bits.len()..].copy_from_slice(&other.bits);
        Ok(m)
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, columns.len());
        for r in 0..self.rows {
            for (j, &c) in columns.iter().enumerate() {
                if self.get(r, c) {
                    m.set(r, j, true);
                }
            }
        }
        m
    }

    /// Matrix product `self * other^T` over GF(2).
    pub fn mul_transpose(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut m = BitMatrix::zeros(self.rows, other.rows);
        for r in 0..self.rows {
            for s in 0..other.rows {
                let dot = self
                    .row_words(r)
                    .iter()
                    .zip(other.row_words(s))
                    .fold(0u32, |acc, (&a, &b)| acc ^ (a & b).count_ones());
                if dot % 2 == 1 {
                    m.set(r, s, true);
                }
            }
        }
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Reduced row echelon form together with the pivot columns.
    ///
    /// Pivots are chosen scanning left-to-right, top-to-bottom, so the output
    /// is canonical for the row space: two matrices have equal RREF iff they
    /// span the same space (after dropping zero rows).
    pub fn row_reduce(&self) -> (BitMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let Some(r) = (pivot_row..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot_row, r);
            for r in 0..m.rows {
                if r != pivot_row && m.get(r, col) {
                    m.xor_rows(r, pivot_row);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().1.len()
    }

    /// Canonical form of the row space: RREF with zero rows dropped.
    pub fn canonical_row_space(&self) -> BitMatrix {
        let (rref, pivots) = self.row_reduce();
        let mut m = BitMatrix::zeros(pivots.len(), self.cols);
        for r in 0..pivots.len() {
            for k in 0..self.words_per_row {
                m.bits[r * m.words_per_row + k] = rref.bits[r * rref.words_per_row + k];
            }
        }
        m
    }

    /// A canonical basis of `{v : self · v^T = 0 mod 2}`, one row per
    /// nullspace dimension (`cols - rank` rows, linearly independent).
    pub fn nullspace_basis(&self) -> BitMatrix {
        let (rref, pivots) = self.row_reduce();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = BitMatrix::zeros(free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            basis.set(i, fc, true);
            // Pivot variable p in row r is determined by the free column:
            // x_p = sum of rref[r][free] entries.
            for (r, &pc) in pivots.iter().enumerate() {
                if rref.get(r, fc) {
                    basis.set(i, pc, true);
                }
            }
        }
        basis.canonical_row_space()
    }

    /// Whether `v` (a 1×cols matrix) lies in the row space of `self`.
    pub fn in_row_space(&self, v: &BitMatrix) -> Result<bool> {
        if v.cols != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.cols,
            });
        }
        Ok(RowSpace::from_matrix(self).contains(v))
    }

    /// XORs row `src_row` of `src` into row `dst_row` of `self`.
    /// Column counts must match.
    pub fn xor_row_from(&mut self, dst_row: usize, src: &BitMatrix, src_row: usize) {
        debug_assert_eq!(self.cols, src.cols);
        let d = dst_row * self.words_per_row;
        let s = src_row * src.words_per_row;
        for k in 0..self.words_per_row {
            self.bits[d + k] ^= src.bits[s + k];
        }
    }

    /// Extracts row `r` as a 1×cols matrix.
    pub fn row(&self, r: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(1, self.cols);
        m.bits.copy_from_slice(self.row_words(r));
        m
    }
}

/// Incrementally grown row space kept in reduced echelon form; supports
/// membership tests and reduction of probe vectors.
#[derive(Clone, Debug)]
pub struct RowSpace {
    cols: usize,
    /// Pivot column of each stored row, strictly increasing.
    pivots: Vec<usize>,
    rows: Vec<BitMatrix>,
}

impl RowSpace {
    pub fn new(cols: usize) -> Self {
        RowSpace {
            cols,
            pivots: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn from_matrix(m: &BitMatrix) -> Self {
        let mut s = Self::new(m.cols());
        for r in 0..m.rows() {
            s.insert(&m.row(r));
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Remainder of `v` after elimination against the stored rows.
    pub fn reduce(&self, v: &BitMatrix) -> BitMatrix {
        debug_assert_eq!(v.cols(), self.cols);
        let mut rem = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if rem.get(0, p) {
                rem.xor_row_from(0, row, 0);
            }
        }
        rem
    }

    pub fn contains(&self, v: &BitMatrix) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the space. Returns false when `v` was already contained.
    pub fn insert(&mut self, v: &BitMatrix) -> bool {
        let rem = self.reduce(v);
        let support = rem.row_support(0);
        let Some(&pivot) = support.first() else {
            return false;
        };
        // Keep reduced form: clear the new pivot from existing rows.
        for (row, _) in self.rows.iter_mut().zip(&self.pivots) {
            if row.get(0, pivot) {
                row.xor_row_from(0, &rem, 0);
            }
        }
        let pos = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(pos, pivot);
        self.rows.insert(pos, rem);
        true
    }

    /// The stored basis as a canonical matrix.
    pub fn to_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows.len(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            m.xor_row_from(r, row, 0);
        }
        m
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", if self.get(r, c) { '1' } else { '0' })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 5x6 generator matrix of the worked two- and three-body example.
    pub(crate) fn example_generator() -> BitMatrix {
        BitMatrix::from_rows(&[
            vec![1, 1, 0, 0, 1, 0],
            vec![1, 0, 1, 0, 1, 0],
            vec![0, 0, 0, 0, 1, 1],
            vec![0, 0, 1, 1, 0, 1],
            vec![0, 1, 0, 1, 0, 1],
        ])
        .unwrap()
    }

    fn example_parity_rows() -> BitMatrix {
        BitMatrix::from_rows(&[vec![1, 1, 1, 1, 0, 0], vec![1, 0, 0, 1, 1, 1]]).unwrap()
    }

    #[test]
    fn row_reduce_example_rank_four() {
        let g = example_generator();
        let (rref, pivots) = g.row_reduce();
        assert_eq!(pivots.len(), 4);
        assert!(pivots.windows(2).all(|w| w[0] < w[1]));
        // Row space preserved: every original row is in the RREF span.
        for r in 0..g.rows() {
            let v = BitMatrix::row_from_support(g.cols(), g.row_support(r));
            assert!(rref.in_row_space(&v).unwrap());
        }
    }

    #[test]
    fn row_reduce_zero_and_identity() {
        let z = BitMatrix::zeros(3, 4);
        let (rref, pivots) = z.row_reduce();
        assert!(rref.is_zero());
        assert!(pivots.is_empty());

        let id = BitMatrix::identity(3);
        let (rref, pivots) = id.row_reduce();
        assert_eq!(rref, id);
        assert_eq!(pivots, vec![0, 1, 2]);
    }

    #[test]
    fn row_reduce_idempotent() {
        let g = example_generator();
        let (r1, p1) = g.row_reduce();
        let (r2, p2) = r1.row_reduce();
        assert_eq!(r1, r2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn nullspace_matches_example_parity_matrix() {
        let g = example_generator();
        let null = g.nullspace_basis();
        assert_eq!(null.rows(), 2);
        // Same row space as the reference parity check matrix.
        assert_eq!(
            null.canonical_row_space(),
            example_parity_rows().canonical_row_space()
        );
        // Direct product check.
        assert!(g.mul_transpose(&null).unwrap().is_zero());
    }

    #[test]
    fn nullspace_of_identity_is_empty() {
        assert_eq!(BitMatrix::identity(4).nullspace_basis().rows(), 0);
    }

    #[test]
    fn nullspace_of_all_ones_row_brute_force() {
        let m = BitMatrix::from_rows(&[vec![1, 1, 1, 1, 1]]).unwrap();
        let null = m.nullspace_basis();
        assert_eq!(null.rows(), 4);
        // Oracle: count vectors v with even weight over 2^5 candidates and
        // confirm each is in the basis span.
        let mut count = 0;
        for v in 0u32..32 {
            let vec = BitMatrix::row_from_support(5, (0..5).filter(|&j| (v >> j) & 1 == 1));
            let in_null = m.mul_transpose(&vec).unwrap().is_zero();
            if in_null {
                count += 1;
            }
            assert_eq!(null.in_row_space(&vec).unwrap(), in_null);
        }
        assert_eq!(count, 16); // 2^4 vectors in a 4-dimensional space
    }

    #[test]
    fn in_row_space_examples() {
        let p = example_parity_rows();
        let mut sum = BitMatrix::zeros(1, 6);
        for c in p.row_support(0) {
            sum.set(0, c, true);
        }
        for c in p.row_support(1) {
            let cur = sum.get(0, c);
            sum.set(0, c, !cur);
        }
        assert!(p.in_row_space(&sum).unwrap());
        assert!(p.in_row_space(&BitMatrix::zeros(1, 6)).unwrap());
        // Enumerating all 4 combinations of the 2 basis rows never yields
        // a unit vector, so membership must be false.
        let e0 = BitMatrix::row_from_support(6, [0]);
        assert!(!p.in_row_space(&e0).unwrap());
    }

    #[test]
    fn in_row_space_dimension_mismatch() {
        let p = example_parity_rows();
        let bad = BitMatrix::zeros(1, 5);
        assert!(matches!(
            p.in_row_space(&bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(example_parity_rows().rank(), 2);
        assert_eq!(BitMatrix::zeros(4, 4).rank(), 0);
        assert_eq!(example_generator().rank(), 4);
    }

    #[test]
    fn wide_matrices_cross_word_boundaries() {
        // Rows wider than one 64-bit word.
        let id = BitMatrix::identity(100);
        assert_eq!(id.rank(), 100);
        assert_eq!(id.nullspace_basis().rows(), 0);

        let mut m = BitMatrix::zeros(3, 130);
        for (r, cols) in [
            (0, vec![0, 63, 64, 129]),
            (1, vec![63, 64]),
            (2, vec![0, 129]),
        ] {
            for c in cols {
                m.set(r, c, true);
            }
        }
        // Row 0 = row 1 + row 2: rank 2, nullspace dim 128.
        assert_eq!(m.rank(), 2);
        let null = m.nullspace_basis();
        assert_eq!(null.rows(), 128);
        assert!(m.mul_transpose(&null).unwrap().is_zero());
        let sum = {
            let mut v = m.row(1);
            v.xor_row_from(0, &m, 2);
            v
        };
        assert_eq!(sum, m.row(0));
        assert!(m.in_row_space(&sum).unwrap());
        assert_eq!(m.row(0).row_support(0), vec![0, 63, 64, 129]);
    }

    proptest! {
        #[test]
        fn rank_nullity(entries in proptest::collection::vec(any::<bool>(), 0..96), cols in 1usize..12) {
            let rows = entries.len() / cols;
            let mut m = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    m.set(r, c, entries[r * cols + c]);
                }
            }
            let null = m.nullspace_basis();
            prop_assert_eq!(m.rank() + null.rows(), cols);
            // Every basis row annihilates m.
            if null.rows() > 0 {
                prop_assert!(m.mul_transpose(&null).unwrap().is_zero());
            }
            // Basis itself has full rank.
            prop_assert_eq!(null.rank(), null.rows());
        }

        #[test]
        fn membership_matches_enumeration(entries in proptest::collection::vec(any::<bool>(), 0..40), cols in 1usize..8, probe in proptest::collection::vec(any::<bool>(), 0..8)) {
            let rows = (entries.len() / cols).min(6);
            let mut m = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    m.set(r, c, entries[r * cols + c]);
                }
            }
            let mut v = BitMatrix::zeros(1, cols);
            for c in 0..cols {
                v.set(0, c, *probe.get(c).unwrap_or(&false));
            }
            // Brute force over all 2^rows combinations.
            let mut found = false;
            for mask in 0u32..(1 << rows) {
                let mut acc = BitMatrix::zeros(1, cols);
                for r in 0..rows {
                    if (mask >> r) & 1 == 1 {
                        for c in m.row_support(r) {
                            let cur = acc.get(0, c);
                            acc.set(0, c, !cur);
                        }
                    }
                }
                if acc == v {
                    found = true;
                    break;
                }
            }
            prop_assert_eq!(m.in_row_space(&v).unwrap(), found);
        }
    }
}
