//! Pivot-free sparse `LDL^T` factorization for quasi-definite matrices.
//!
//! The factorization is split into a symbolic phase, run once per sparsity
//! pattern, and a numeric phase that only writes into storage sized by the
//! symbolic phase. The numeric kernel is the up-looking row-by-row scheme:
//! row `k` of `L` is the solution of a sparse triangular system whose
//! pattern is the reach of column `k` in the elimination tree.
//!
//! No pivoting is performed. A quasi-definite matrix admits the
//! factorization under any symmetric permutation, so the only failure mode is
//! a pivot that comes out with the wrong sign or too close to zero, which is
//! reported back to the caller as [`FactorError::QuasiDefinite`].

use thiserror::Error;

use super::amd::invert_permutation;
use super::csc::CscMatrix;
use crate::error::StructureError;

const NONE: usize = usize::MAX;

/// Relative pivot threshold: `d_k * sign_k` must exceed this times the
/// largest magnitude in row/column `k` of the permuted matrix.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    /// Pivot of permuted column `column` (original index `original`) is zero or
    /// has the wrong sign.
    #[error("pivot {column} (original index {original}) lost its expected sign: d = {pivot:e}")]
    QuasiDefinite {
        column: usize,
        original: usize,
        pivot: f64,
    },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Ordering, elimination tree and the fixed pattern of `L`.
#[derive(Debug, Clone)]
pub struct SymbolicFactorization {
    pub(crate) n: usize,
    /// `perm[k]` is the original index placed at position `k`.
    pub perm: Vec<usize>,
    pub perm_inv: Vec<usize>,
    /// Parent of each column of the permuted matrix, `None` for roots.
    pub etree: Vec<Option<usize>>,
    /// Number of strictly-lower nonzeros in each column of `L`.
    pub l_col_counts: Vec<usize>,
    pub l_col_ptr: Vec<usize>,
    pub l_row_idx: Vec<usize>,
    // Pattern of the input (upper triangle, original ordering).
    src_col_ptr: Vec<usize>,
    src_row_idx: Vec<usize>,
    // Upper triangle of the permuted matrix, and where each input entry lands.
    perm_col_ptr: Vec<usize>,
    perm_row_idx: Vec<usize>,
    src_to_perm: Vec<usize>,
}

impl SymbolicFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros strictly below the diagonal of `L`.
    pub fn l_nnz(&self) -> usize {
        self.l_row_idx.len()
    }

    /// Number of stored entries of the input pattern.
    pub fn input_nnz(&self) -> usize {
        self.src_row_idx.len()
    }

    /// Whether `m` has exactly the pattern this analysis was built from.
    pub fn matches_pattern(&self, m: &CscMatrix) -> bool {
        m.nrows == self.n
            && m.ncols == self.n
            && m.col_ptr == self.src_col_ptr
            && m.row_idx == self.src_row_idx
    }
}

/// Symbolic analysis of the upper-triangular `pattern` under permutation `perm`.
pub fn symbolic_factorize(
    pattern: &CscMatrix,
    perm: &[usize],
) -> Result<SymbolicFactorization, StructureError> {
    pattern.check_pattern()?;
    pattern.check_upper_triangular()?;
    let n = pattern.ncols;
    if perm.len() != n {
        return Err(StructureError::Dimension {
            what: "permutation",
            expected: n,
            got: perm.len(),
        });
    }
    let perm_inv = invert_permutation(perm)?;

    // Upper triangle of the permuted matrix.
    let nnz = pattern.nnz();
    let mut counts = vec![0usize; n + 1];
    for (r, c, _) in pattern.iter() {
        let (pr, pc) = (perm_inv[r], perm_inv[c]);
        counts[pr.max(pc) + 1] += 1;
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let perm_col_ptr = counts.clone();
    let mut next = counts;
    let mut perm_row_idx = vec![0usize; nnz];
    let mut src_to_perm = vec![0usize; nnz];
    for j in 0..n {
        for k in pattern.col_ptr[j]..pattern.col_ptr[j + 1] {
            let (pr, pc) = (perm_inv[pattern.row_idx[k]], perm_inv[j]);
            let col = pr.max(pc);
            perm_row_idx[next[col]] = pr.min(pc);
            src_to_perm[k] = next[col];
            next[col] += 1;
        }
    }
    // Sort rows inside each permuted column, carrying the source map along.
    let mut owner = vec![0usize; nnz];
    for (k, &dst) in src_to_perm.iter().enumerate() {
        owner[dst] = k;
    }
    let mut scratch: Vec<(usize, usize)> = Vec::new();
    for j in 0..n {
        let range = perm_col_ptr[j]..perm_col_ptr[j + 1];
        scratch.clear();
        scratch.extend(range.clone().map(|q| (perm_row_idx[q], owner[q])));
        scratch.sort_unstable();
        for (off, &(r, src)) in scratch.iter().enumerate() {
            perm_row_idx[range.start + off] = r;
            src_to_perm[src] = range.start + off;
        }
    }

    // Elimination tree and column counts.
    let mut parent = vec![NONE; n];
    let mut l_col_counts = vec![0usize; n];
    let mut flag = vec![NONE; n];
    for j in 0..n {
        flag[j] = j;
        for q in perm_col_ptr[j]..perm_col_ptr[j + 1] {
            let mut i = perm_row_idx[q];
            while flag[i] != j {
                if parent[i] == NONE {
                    parent[i] = j;
                }
                l_col_counts[i] += 1;
                flag[i] = j;
                i = parent[i];
            }
        }
    }
    let mut l_col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        l_col_ptr[j + 1] = l_col_ptr[j] + l_col_counts[j];
    }

    // Row indices of L: row k touches every column on the etree paths from
    // the entries of column k up to k. Rows arrive in increasing order.
    let mut l_row_idx = vec![0usize; l_col_ptr[n]];
    let mut fill = l_col_ptr.clone();
    flag.iter_mut().for_each(|f| *f = NONE);
    for k in 0..n {
        flag[k] = k;
        for q in perm_col_ptr[k]..perm_col_ptr[k + 1] {
            let mut i = perm_row_idx[q];
            while flag[i] != k {
                l_row_idx[fill[i]] = k;
                fill[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }

    Ok(SymbolicFactorization {
        n,
        perm: perm.to_vec(),
        perm_inv,
        etree: parent.iter().map(|&p| (p != NONE).then_some(p)).collect(),
        l_col_counts,
        l_col_ptr,
        l_row_idx,
        src_col_ptr: pattern.col_ptr.clone(),
        src_row_idx: pattern.row_idx.clone(),
        perm_col_ptr,
        perm_row_idx,
        src_to_perm,
    })
}

/// Numeric factors `L` (unit lower triangular) and `D` over a fixed symbolic analysis.
///
/// All buffers are sized on construction; [`LdlFactorization::refactor`] and
/// [`LdlFactorization::solve_in_place`] never allocate.
#[derive(Debug, Clone)]
pub struct LdlFactorization {
    pub symbolic: SymbolicFactorization,
    pub l_values: Vec<f64>,
    pub d: Vec<f64>,
    d_inv: Vec<f64>,
    perm_values: Vec<f64>,
    row_scale: Vec<f64>,
    signs: Vec<f64>,
    // up-looking workspace
    y_vals: Vec<f64>,
    y_used: Vec<bool>,
    y_idx: Vec<usize>,
    elim: Vec<usize>,
    next_in_col: Vec<usize>,
    factored: bool,
}

impl LdlFactorization {
    /// Allocates numeric storage for `symbolic`. Nothing is factored yet.
    pub fn new(symbolic: SymbolicFactorization) -> Self {
        let n = symbolic.n;
        let l_nnz = symbolic.l_nnz();
        let nnz = symbolic.input_nnz();
        LdlFactorization {
            l_values: vec![0.0; l_nnz],
            d: vec![0.0; n],
            d_inv: vec![0.0; n],
            perm_values: vec![0.0; nnz],
            row_scale: vec![0.0; n],
            signs: vec![1.0; n],
            y_vals: vec![0.0; n],
            y_used: vec![false; n],
            y_idx: vec![0; n],
            elim: vec![0; n],
            next_in_col: vec![0; n],
            factored: false,
            symbolic,
        }
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }

    /// Numeric factorization of `matrix`, whose pattern must match the
    /// symbolic analysis. `expected_signs` is indexed in the original
    /// ordering: `+1` where `D` must be positive, `-1` where it must be negative.
    pub fn refactor(&mut self, matrix: &CscMatrix, expected_signs: &[i8]) -> Result<(), FactorError> {
        self.factored = false;
        let n = self.symbolic.n;
        if !self.symbolic.matches_pattern(matrix) {
            return Err(StructureError::PatternMismatch { what: "factorized matrix" }.into());
        }
        if expected_signs.len() != n {
            return Err(StructureError::Dimension {
                what: "expected signs",
                expected: n,
                got: expected_signs.len(),
            }
            .into());
        }
        if matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(StructureError::NonFinite { what: "factorized matrix" }.into());
        }
        let sym = &self.symbolic;
        for (src, &dst) in sym.src_to_perm.iter().enumerate() {
            self.perm_values[dst] = matrix.values[src];
        }
        for k in 0..n {
            self.signs[k] = if expected_signs[sym.perm[k]] < 0 { -1.0 } else { 1.0 };
        }
        self.row_scale.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            for q in sym.perm_col_ptr[j]..sym.perm_col_ptr[j + 1] {
                let i = sym.perm_row_idx[q];
                let a = self.perm_values[q].abs();
                self.row_scale[i] = self.row_scale[i].max(a);
                self.row_scale[j] = self.row_scale[j].max(a);
            }
        }

        self.next_in_col.copy_from_slice(&sym.l_col_ptr[..n]);
        let lp = &sym.l_col_ptr;
        let li = &sym.l_row_idx;
        for k in 0..n {
            let mut n_y = 0usize;
            self.d[k] = 0.0;
            for q in sym.perm_col_ptr[k]..sym.perm_col_ptr[k + 1] {
                let b = sym.perm_row_idx[q];
                if b == k {
                    self.d[k] = self.perm_values[q];
                    continue;
                }
                self.y_vals[b] = self.perm_values[q];
                if self.y_used[b] {
                    continue;
                }
                self.y_used[b] = true;
                self.elim[0] = b;
                let mut n_e = 1usize;
                let mut nxt = sym.etree[b];
                while let Some(i) = nxt {
                    if i >= k || self.y_used[i] {
                        break;
                    }
                    self.y_used[i] = true;
                    self.elim[n_e] = i;
                    n_e += 1;
                    nxt = sym.etree[i];
                }
                while n_e > 0 {
                    n_e -= 1;
                    self.y_idx[n_y] = self.elim[n_e];
                    n_y += 1;
                }
            }
            for t in (0..n_y).rev() {
                let c = self.y_idx[t];
                let slot = self.next_in_col[c];
                let yc = self.y_vals[c];
                for q in lp[c]..slot {
                    self.y_vals[li[q]] -= self.l_values[q] * yc;
                }
                debug_assert_eq!(li[slot], k);
                let l = yc * self.d_inv[c];
                self.l_values[slot] = l;
                self.d[k] -= yc * l;
                self.next_in_col[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_used[c] = false;
            }
            let dk = self.d[k];
            if !(dk * self.signs[k] > PIVOT_THRESHOLD * self.row_scale[k]) {
                // Leave the workspace clean for the next attempt.
                for t in 0..n {
                    self.y_vals[t] = 0.0;
                    self.y_used[t] = false;
                }
                return Err(FactorError::QuasiDefinite {
                    column: k,
                    original: sym.perm[k],
                    pivot: dk,
                });
            }
            self.d_inv[k] = 1.0 / dk;
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `K x = b` in place, with `work` of length `n` as scratch.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) -> Result<(), StructureError> {
        let n = self.symbolic.n;
        if b.len() != n || work.len() < n {
            return Err(StructureError::Dimension {
                what: "right-hand side",
                expected: n,
                got: b.len(),
            });
        }
        let sym = &self.symbolic;
        let x = &mut work[..n];
        for k in 0..n {
            x[k] = b[sym.perm[k]];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for q in sym.l_col_ptr[j]..sym.l_col_ptr[j + 1] {
                    x[sym.l_row_idx[q]] -= self.l_values[q] * xj;
                }
            }
        }
        for k in 0..n {
            x[k] *= self.d_inv[k];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for q in sym.l_col_ptr[j]..sym.l_col_ptr[j + 1] {
                acc -= self.l_values[q] * x[sym.l_row_idx[q]];
            }
            x[j] = acc;
        }
        for k in 0..n {
            b[sym.perm[k]] = x[k];
        }
        Ok(())
    }

    /// Allocating convenience wrapper around [`Self::solve_in_place`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, StructureError> {
        let mut x = rhs.to_vec();
        let mut work = vec![0.0; self.symbolic.n];
        self.solve_in_place(&mut x, &mut work)?;
        Ok(x)
    }

    /// Dense `L` (row-major, unit diagonal) in permuted ordering. For tests.
    pub fn l_dense(&self) -> Vec<f64> {
        let n = self.symbolic.n;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            out[j * n + j] = 1.0;
            for q in self.symbolic.l_col_ptr[j]..self.symbolic.l_col_ptr[j + 1] {
                out[self.symbolic.l_row_idx[q] * n + j] = self.l_values[q];
            }
        }
        out
    }

    /// Number of positive and negative entries of `D`.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&d| d > 0.0).count();
        (pos, self.d.len() - pos)
    }
}

/// One-shot numeric factorization: allocates storage for `symbolic` and factors `matrix`.
pub fn numeric_factorize(
    matrix: &CscMatrix,
    symbolic: &SymbolicFactorization,
    expected_signs: &[i8],
) -> Result<LdlFactorization, FactorError> {
    let mut f = LdlFactorization::new(symbolic.clone());
    f.refactor(matrix, expected_signs)?;
    Ok(f)
}

/// Solves `K x = rhs` with a completed factorization.
pub fn ldl_solve(fact: &LdlFactorization, rhs: &[f64]) -> Result<Vec<f64>, StructureError> {
    fact.solve(rhs)
}
