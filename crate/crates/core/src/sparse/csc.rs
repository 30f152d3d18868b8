//! Compressed sparse column storage.

use crate::error::StructureError;

/// A matrix in compressed sparse column format.
///
/// Row indices inside each column are strictly increasing. Symmetric
/// matrices are stored as their upper triangle, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw CSC arrays, validating every structural invariant.
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, StructureError> {
        let m = CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        m.check()?;
        Ok(m)
    }

    /// An `nrows x ncols` matrix without entries.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are summed.
    /// Explicit zeros are kept so that the pattern is exactly what was supplied.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, StructureError> {
        let mut counts = vec![0usize; ncols + 1];
        for &(r, c, v) in triplets {
            if c >= ncols {
                return Err(StructureError::Dimension {
                    what: "triplet column",
                    expected: ncols,
                    got: c,
                });
            }
            if r >= nrows {
                return Err(StructureError::RowOutOfRange { row: r, col: c, nrows });
            }
            if !v.is_finite() {
                return Err(StructureError::NonFinite { what: "triplet value" });
            }
            counts[c + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            rows[next[c]] = r;
            vals[next[c]] = v;
            next[c] += 1;
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            for &(r, v) in &scratch {
                if row_idx.len() > col_ptr[j] && *row_idx.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Converts a dense row-major matrix, keeping entries that are not exactly zero.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), nrows * ncols, "dense data has the wrong length");
        let mut trip = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = data[i * ncols + j];
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip).expect("dense data is finite")
    }

    pub fn nnz(&self) -> usize {
        self.col_ptr[self.ncols]
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Iterates over `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], j, self.values[k]))
        })
    }

    /// Validates the structural invariants and finiteness of the values.
    pub fn check(&self) -> Result<(), StructureError> {
        self.check_pattern()?;
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(StructureError::NonFinite { what: "matrix values" });
        }
        Ok(())
    }

    pub(crate) fn check_pattern(&self) -> Result<(), StructureError> {
        if self.col_ptr.len() != self.ncols + 1 {
            return Err(StructureError::ColPtrLength {
                expected: self.ncols + 1,
                got: self.col_ptr.len(),
            });
        }
        if self.col_ptr[0] != 0 || self.col_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(StructureError::ColPtrOrder);
        }
        let nnz = self.col_ptr[self.ncols];
        if self.row_idx.len() != nnz || self.values.len() != nnz {
            return Err(StructureError::NnzMismatch {
                nnz,
                rows: self.row_idx.len(),
                values: self.values.len(),
            });
        }
        for j in 0..self.ncols {
            let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
            for (k, &r) in rows.iter().enumerate() {
                if r >= self.nrows {
                    return Err(StructureError::RowOutOfRange {
                        row: r,
                        col: j,
                        nrows: self.nrows,
                    });
                }
                if k > 0 && rows[k - 1] >= r {
                    return Err(StructureError::UnsortedColumn { col: j });
                }
            }
        }
        Ok(())
    }

    /// Checks that the matrix is square and holds only upper-triangular entries.
    pub fn check_upper_triangular(&self) -> Result<(), StructureError> {
        if !self.is_square() {
            return Err(StructureError::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        for (r, c, _) in self.iter() {
            if r > c {
                return Err(StructureError::NotUpperTriangular { row: r, col: c });
            }
        }
        Ok(())
    }

    /// True when `other` has exactly the same dimensions and sparsity pattern.
    pub fn same_pattern(&self, other: &CscMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_ptr == other.col_ptr
            && self.row_idx == other.row_idx
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let nnz = self.nnz();
        let mut row_idx = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[k];
                row_idx[next[r]] = j;
                values[next[r]] = self.values[k];
                next[r] += 1;
            }
        }
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    /// Stacks `self` on top of `other` (same column count).
    pub fn vstack(&self, other: &CscMatrix) -> CscMatrix {
        assert_eq!(self.ncols, other.ncols, "vstack needs equal column counts");
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        col_ptr.push(0);
        for j in 0..self.ncols {
            let (r1, v1) = self.col(j);
            row_idx.extend_from_slice(r1);
            values.extend_from_slice(v1);
            let (r2, v2) = other.col(j);
            row_idx.extend(r2.iter().map(|r| r + self.nrows));
            values.extend_from_slice(v2);
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Upper triangle of `self + self^T` restricted to the upper part, i.e. the
    /// symmetric matrix whose upper triangle is formed from both triangles of
    /// `self`. Entries given in both triangles are summed then halved.
    pub fn symmetric_upper_from_full(&self) -> Result<CscMatrix, StructureError> {
        if !self.is_square() {
            return Err(StructureError::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        let t = self.transpose();
        let mut trip = Vec::new();
        for (r, c, v) in self.iter().chain(t.iter()) {
            if r <= c {
                trip.push((r, c, 0.5 * v));
            }
        }
        CscMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// `y += alpha * A x`.
    pub fn gemv(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    /// `y += alpha * A^T x`.
    pub fn gemv_t(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[k] * x[self.row_idx[k]];
            }
            y[j] += alpha * acc;
        }
    }

    /// `y += alpha * S x` where `self` is the upper triangle of a symmetric `S`.
    pub fn symv_upper(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = alpha * self.values[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// Dense row-major copy. Intended for tests and small problems.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.iter() {
            out[r * self.ncols + c] += v;
        }
        out
    }

    /// Largest absolute value, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CscMatrix::from_triplets(3, 2, &[(2, 0, 1.0), (0, 0, 2.0), (2, 0, 3.0), (1, 1, -1.0)])
            .unwrap();
        assert_eq!(m.col_ptr, vec![0, 2, 3]);
        assert_eq!(m.row_idx, vec![0, 2, 1]);
        assert_eq!(m.values, vec![2.0, 4.0, -1.0]);
        m.check().unwrap();
    }

    #[test]
    fn rejects_malformed() {
        let bad = CscMatrix::new(2, 1, vec![0, 2], vec![1, 0], vec![1.0, 1.0]);
        assert_eq!(bad, Err(StructureError::UnsortedColumn { col: 0 }));
        let bad = CscMatrix::new(2, 1, vec![0, 1], vec![2], vec![1.0]);
        assert!(matches!(bad, Err(StructureError::RowOutOfRange { .. })));
        let bad = CscMatrix::new(2, 1, vec![0, 1], vec![0], vec![f64::NAN]);
        assert!(matches!(bad, Err(StructureError::NonFinite { .. })));
        let bad = CscMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]);
        assert!(matches!(bad, Err(StructureError::ColPtrLength { .. })));
    }

    #[test]
    fn products_match_dense() {
        let a = CscMatrix::from_dense(2, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, -1.0]);
        let mut y = vec![0.0; 2];
        a.gemv(1.0, &[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![7.0, 3.0]);
        let mut z = vec![0.0; 3];
        a.gemv_t(2.0, &[1.0, 1.0], &mut z);
        assert_eq!(z, vec![2.0, 6.0, 2.0]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn symmetric_upper_product() {
        // [[2, 1], [1, 3]]
        let s = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        s.check_upper_triangular().unwrap();
        let mut y = vec![0.0; 2];
        s.symv_upper(1.0, &[1.0, -1.0], &mut y);
        assert_eq!(y, vec![1.0, -2.0]);
    }

    #[test]
    fn full_to_upper_averages_triangles() {
        let f = CscMatrix::from_dense(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let u = f.symmetric_upper_from_full().unwrap();
        assert_eq!(u.to_dense(), vec![4.0, 1.0, 0.0, 2.0]);
    }
}
