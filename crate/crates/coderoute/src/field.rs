//! Exact linear algebra over the prime field Z_p.
//!
//! Everything here is integer arithmetic on values reduced mod p; there is no
//! floating point. Span membership is a discrete predicate and is computed by
//! Gaussian elimination with exact modular inverses.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds 2^31")]
    ModulusTooLarge(u64),
    #[error("entry {value} out of range for modulus {p}")]
    EntryOutOfRange { value: u64, p: u64 },
    #[error("expected {expected} entries, got {got}")]
    WrongEntryCount { expected: usize, got: usize },
    #[error("matrix must have at least one column")]
    NoColumns,
    #[error("vector length {got} does not match column count {cols}")]
    DimensionMismatch { got: usize, cols: usize },
}

pub const MAX_MODULUS: u64 = 1 << 31;

/// Trial-division primality test. Moduli are capped at 2^31 so this is cheap
/// and only runs at construction time.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn check_modulus(p: u64) -> Result<(), FieldError> {
    if p > MAX_MODULUS {
        return Err(FieldError::ModulusTooLarge(p));
    }
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    Ok(())
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    base %= p;
    let mut acc = 1 % p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse via Fermat's little theorem. `a` must be nonzero mod p.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// Dense row-major matrix with entries in [0, p).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    p: u64,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FieldMatrix {
    /// Builds a matrix, rejecting non-prime moduli and out-of-range entries.
    pub fn new(p: u64, rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self, FieldError> {
        check_modulus(p)?;
        if cols == 0 {
            return Err(FieldError::NoColumns);
        }
        if entries.len() != rows * cols {
            return Err(FieldError::WrongEntryCount {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for &v in &entries {
            if v >= p {
                return Err(FieldError::EntryOutOfRange { value: v, p });
            }
        }
        Ok(Self {
            p,
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(p: u64, rows: &[Vec<u64>], cols: usize) -> Result<Self, FieldError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(FieldError::WrongEntryCount {
                    expected: cols,
                    got: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::new(p, rows.len(), cols, entries)
    }

    pub fn zeros(p: u64, rows: usize, cols: usize) -> Result<Self, FieldError> {
        Self::new(p, rows, cols, vec![0; rows * cols])
    }

    pub fn identity(p: u64, n: usize) -> Result<Self, FieldError> {
        let mut m = Self::zeros(p, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut entries = vec![0u64; self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                entries[c * self.rows + r] = self.get(r, c);
            }
        }
        FieldMatrix {
            p: self.p,
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Returns a new matrix keeping only the given rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> FieldMatrix {
        let mut entries = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            entries.extend_from_slice(self.row(r));
        }
        FieldMatrix {
            p: self.p,
            rows: keep.len(),
            cols: self.cols,
            entries,
        }
    }

    /// Reduced row-echelon form together with the rank. Idempotent on its own
    /// output.
    pub fn rref_rank(&self) -> (FieldMatrix, usize) {
        let mut m = self.clone();
        let (rank, _ops) = m.reduce_in_place();
        (m, rank)
    }

    pub fn rank(&self) -> usize {
        self.rref_rank().1
    }

    /// True iff `t` is a Z_p-linear combination of the rows. The empty row set
    /// spans only the zero vector.
    pub fn in_span(&self, t: &[u64]) -> Result<bool, FieldError> {
        self.in_span_counted(t).map(|(b, _)| b)
    }

    /// Like [`in_span`](Self::in_span) but also reports the number of row
    /// operations spent, for run-time audits. One operation is one elimination
    /// of a row against a pivot (a length-`cols` vector update).
    pub fn in_span_counted(&self, t: &[u64]) -> Result<(bool, u64), FieldError> {
        if t.len() != self.cols {
            return Err(FieldError::DimensionMismatch {
                got: t.len(),
                cols: self.cols,
            });
        }
        for &v in t {
            if v >= self.p {
                return Err(FieldError::EntryOutOfRange {
                    value: v,
                    p: self.p,
                });
            }
        }
        let mut m = self.clone();
        let (_, mut ops) = m.reduce_in_place();
        // Reduce t against the pivots of the echelon form; t is in the span
        // iff it reduces to zero.
        let p = self.p;
        let mut t = t.to_vec();
        for r in 0..m.rows {
            let pivot_col = match m.row(r).iter().position(|&v| v != 0) {
                Some(c) => c,
                None => break,
            };
            if t[pivot_col] != 0 {
                let factor = t[pivot_col]; // pivot is normalized to 1
                for c in 0..m.cols {
                    t[c] = (t[c] + (p - factor) * m.get(r, c)) % p;
                }
                ops += 1;
            }
        }
        Ok((t.iter().all(|&v| v == 0), ops))
    }

    /// In-place Gauss-Jordan elimination. Returns (rank, row operations).
    fn reduce_in_place(&mut self) -> (usize, u64) {
        let p = self.p;
        let mut ops = 0u64;
        let mut pivot_row = 0usize;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let found = (pivot_row..self.rows).find(|&r| self.get(r, col) != 0);
            let Some(r0) = found else { continue };
            if r0 != pivot_row {
                for c in 0..self.cols {
                    self.entries
                        .swap(r0 * self.cols + c, pivot_row * self.cols + c);
                }
            }
            let inv = inv_mod(self.get(pivot_row, col), p);
            if inv != 1 {
                for c in col..self.cols {
                    let v = self.get(pivot_row, c);
                    self.entries[pivot_row * self.cols + c] = v * inv % p;
                }
            }
            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor == 0 {
                    continue;
                }
                for c in 0..self.cols {
                    let v = self.get(r, c);
                    self.entries[r * self.cols + c] =
                        (v + (p - factor) * self.get(pivot_row, c)) % p;
                }
                ops += 1;
            }
            pivot_row += 1;
        }
        (pivot_row, ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(p: u64, rows: &[&[u64]]) -> FieldMatrix {
        let cols = rows.first().map_or(1, |r| r.len());
        let rows: Vec<Vec<u64>> = rows.iter().map(|r| r.to_vec()).collect();
        FieldMatrix::from_rows(p, &rows, cols).unwrap()
    }

    /// Brute-force span membership: enumerate all p^d coefficient vectors.
    fn in_span_brute(rows: &FieldMatrix, t: &[u64]) -> bool {
        let p = rows.modulus();
        let d = rows.rows();
        let total = (p as u128).pow(d as u32);
        for mut idx in 0..total {
            let mut acc = vec![0u64; rows.cols()];
            for r in 0..d {
                let coeff = (idx % p as u128) as u64;
                idx /= p as u128;
                for c in 0..rows.cols() {
                    acc[c] = (acc[c] + coeff * rows.get(r, c)) % p;
                }
            }
            if acc == t {
                return true;
            }
        }
        false
    }

    /// Brute-force rank: the span of d rows over Z_p has exactly p^rank
    /// distinct vectors.
    fn rank_brute(rows: &FieldMatrix) -> usize {
        let p = rows.modulus();
        let d = rows.rows();
        let total = (p as u128).pow(d as u32);
        let mut seen = std::collections::HashSet::new();
        for mut idx in 0..total {
            let mut acc = vec![0u64; rows.cols()];
            for r in 0..d {
                let coeff = (idx % p as u128) as u64;
                idx /= p as u128;
                for c in 0..rows.cols() {
                    acc[c] = (acc[c] + coeff * rows.get(r, c)) % p;
                }
            }
            seen.insert(acc);
        }
        let mut rank = 0;
        let mut count = 1u128;
        while count < seen.len() as u128 {
            count *= p as u128;
            rank += 1;
        }
        assert_eq!(count, seen.len() as u128, "span size must be a power of p");
        rank
    }

    #[test]
    fn rejects_bad_moduli_and_entries() {
        assert_eq!(
            FieldMatrix::new(4, 1, 1, vec![0]).unwrap_err(),
            FieldError::NotPrime(4)
        );
        assert_eq!(
            FieldMatrix::new(1, 1, 1, vec![0]).unwrap_err(),
            FieldError::NotPrime(1)
        );
        assert!(FieldMatrix::new(2, 1, 2, vec![0, 2]).is_err());
        assert!(FieldMatrix::new((1 << 31) + 11, 0, 1, vec![]).is_err());
    }

    #[test]
    fn rank_identity() {
        let id = FieldMatrix::identity(2, 2).unwrap();
        let (r, rank) = id.rref_rank();
        assert_eq!(rank, 2);
        assert_eq!(r, id);
    }

    #[test]
    fn rank_duplicate_row() {
        let a = m(2, &[&[1, 0], &[1, 0]]);
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn rank_xor_matrix() {
        // Hand row-reduction gives rank 2; cross-checked against the
        // enumeration oracle.
        let a = m(2, &[&[1, 0], &[0, 1], &[1, 0], &[0, 1]]);
        assert_eq!(a.rank(), 2);
        assert_eq!(rank_brute(&a), 2);
    }

    #[test]
    fn rref_is_idempotent() {
        let a = m(5, &[&[2, 3, 1], &[4, 1, 0], &[1, 4, 4]]);
        let (r1, k1) = a.rref_rank();
        let (r2, k2) = r1.rref_rank();
        assert_eq!(r1, r2);
        assert_eq!(k1, k2);
    }

    #[test]
    fn span_examples() {
        let basis = m(2, &[&[1, 0], &[0, 1]]);
        assert!(basis.in_span(&[1, 1]).unwrap());
        let single = m(2, &[&[1, 0]]);
        assert!(!single.in_span(&[1, 1]).unwrap());
        let empty = FieldMatrix::zeros(2, 0, 1).unwrap();
        assert!(!empty.in_span(&[1]).unwrap());
        assert!(empty.in_span(&[0]).unwrap());
    }

    #[test]
    fn span_dimension_mismatch() {
        let a = m(2, &[&[1, 0]]);
        assert_eq!(
            a.in_span(&[1]).unwrap_err(),
            FieldError::DimensionMismatch { got: 1, cols: 2 }
        );
    }

    #[test]
    fn every_row_is_in_own_span() {
        let a = m(3, &[&[1, 2, 0], &[0, 1, 1], &[2, 2, 2]]);
        for r in 0..a.rows() {
            assert!(a.in_span(a.row(r)).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn in_span_matches_brute_force(
            p in prop::sample::select(vec![2u64, 3, 5]),
            rows_frac in 0.0f64..1.0,
            cols in 1usize..4,
            seed in any::<u64>(),
        ) {
            // Keep the enumeration of p^rows coefficient vectors tractable:
            // up to 12 rows over Z_2, fewer as p grows.
            let max_rows = match p {
                2 => 12,
                3 => 7,
                _ => 5,
            };
            let rows = (rows_frac * (max_rows + 1) as f64) as usize;
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            let entries: Vec<u64> = (0..rows * cols).map(|_| next() % p).collect();
            let a = FieldMatrix::new(p, rows, cols, entries).unwrap();
            let t: Vec<u64> = (0..cols).map(|_| next() % p).collect();
            prop_assert_eq!(a.in_span(&t).unwrap(), in_span_brute(&a, &t));
        }

        #[test]
        fn rank_equals_transpose_rank(
            p in prop::sample::select(vec![2u64, 3, 5]),
            rows in 0usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            let entries: Vec<u64> = (0..rows * cols).map(|_| next() % p).collect();
            let a = FieldMatrix::new(p, rows, cols, entries).unwrap();
            prop_assert_eq!(a.rank(), a.transpose().rank());
        }

        #[test]
        fn rank_matches_brute_force(
            p in prop::sample::select(vec![2u64, 3]),
            rows in 0usize..5,
            cols in 1usize..4,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 33
            };
            let entries: Vec<u64> = (0..rows * cols).map(|_| next() % p).collect();
            let a = FieldMatrix::new(p, rows, cols, entries).unwrap();
            prop_assert_eq!(a.rank(), rank_brute(&a));
        }
    }
}
