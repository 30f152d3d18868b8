#![allow(non_snake_case)]
//! The reduced (slack-eliminated) KKT system
//!
//! ```text
//! [ P + ρI   Aᵀ    Gᵀ        ] [Δx]   [rˣ]
//! [ A       -δI    0         ] [Δy] = [rʸ]
//! [ G        0    -(W + δI)  ] [Δz]   [r̄ᶻ]
//! ```
//!
//! with `W = diag(s ./ z)` and `r̄ᶻ = rᶻ - Z⁻¹ rˢ`. The upper triangle is
//! assembled once; only the diagonal changes between iterations.

use thiserror::Error;

use crate::error::StructureError;
use crate::problem::QpProblem;
use crate::sparse::{amd_ordering, symbolic_factorize, CscMatrix, FactorError, LdlFactorization};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error("factorization failed after {retries} regularization retries")]
    RetriesExhausted { retries: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Search direction `(Δx, Δy, Δz, Δs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
    pub ds: Vec<f64>,
}

impl Direction {
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        Direction {
            dx: vec![0.0; n],
            dy: vec![0.0; p],
            dz: vec![0.0; m],
            ds: vec![0.0; m],
        }
    }
}

/// Assembled KKT matrix, its factorization and solve buffers.
#[derive(Debug, Clone)]
pub struct KktSystem {
    n: usize,
    p: usize,
    m: usize,
    matrix: CscMatrix,
    signs: Vec<i8>,
    p_map: Vec<usize>,
    a_map: Vec<usize>,
    g_map: Vec<usize>,
    diag: Vec<usize>,
    p_diag: Vec<f64>,
    factor: LdlFactorization,
    rhs: Vec<f64>,
    work: Vec<f64>,
    /// Reduced right-hand side and residual kept for iterative refinement.
    target: Vec<f64>,
    resid: Vec<f64>,
    scale: Vec<f64>,
    last_retries: usize,
    /// Regularization actually used by the last successful factorization.
    used_reg: (f64, f64),
}

impl KktSystem {
    /// Assembles the pattern for `data` (box bounds already converted),
    /// computes the ordering and the symbolic factorization.
    pub fn new(data: &QpProblem) -> Result<Self, StructureError> {
        let (n, p, m) = (data.n(), data.p(), data.m());
        let dim = n + p + m;
        let at = data.A.transpose();
        let gt = data.G.transpose();
        let a_back = transpose_positions(&data.A);
        let g_back = transpose_positions(&data.G);

        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        let mut p_map = vec![0usize; data.P.nnz()];
        let mut a_map = vec![0usize; data.A.nnz()];
        let mut g_map = vec![0usize; data.G.nnz()];
        let mut diag = vec![0usize; dim];
        col_ptr.push(0);
        for j in 0..n {
            let mut has_diag = false;
            for k in data.P.col_ptr[j]..data.P.col_ptr[j + 1] {
                let r = data.P.row_idx[k];
                if r == j {
                    has_diag = true;
                    diag[j] = row_idx.len();
                }
                p_map[k] = row_idx.len();
                row_idx.push(r);
            }
            if !has_diag {
                diag[j] = row_idx.len();
                row_idx.push(j);
            }
            col_ptr.push(row_idx.len());
        }
        for (t, back, map, off) in [(&at, &a_back, &mut a_map, n), (&gt, &g_back, &mut g_map, n + p)] {
            for i in 0..t.ncols {
                for k in t.col_ptr[i]..t.col_ptr[i + 1] {
                    map[back[k]] = row_idx.len();
                    row_idx.push(t.row_idx[k]);
                }
                diag[off + i] = row_idx.len();
                row_idx.push(off + i);
                col_ptr.push(row_idx.len());
            }
        }
        let nnz = row_idx.len();
        let matrix = CscMatrix {
            nrows: dim,
            ncols: dim,
            col_ptr,
            row_idx,
            values: vec![0.0; nnz],
        };
        let mut signs = vec![1i8; dim];
        signs[n..].iter_mut().for_each(|s| *s = -1);

        let perm = amd_ordering(&matrix)?;
        let symbolic = symbolic_factorize(&matrix, &perm)?;
        let mut kkt = KktSystem {
            n,
            p,
            m,
            matrix,
            signs,
            p_map,
            a_map,
            g_map,
            diag,
            p_diag: vec![0.0; n],
            factor: LdlFactorization::new(symbolic),
            rhs: vec![0.0; dim],
            work: vec![0.0; dim],
            target: vec![0.0; dim],
            resid: vec![0.0; dim],
            scale: vec![0.0; dim],
            last_retries: 0,
            used_reg: (0.0, 0.0),
        };
        kkt.load_data(data);
        Ok(kkt)
    }

    /// Copies the values of `P`, `A`, `G` into the matrix. Patterns must
    /// match those given to [`KktSystem::new`].
    pub fn load_data(&mut self, data: &QpProblem) {
        for &d in &self.diag[..self.n] {
            self.matrix.values[d] = 0.0;
        }
        for (k, &dst) in self.p_map.iter().enumerate() {
            self.matrix.values[dst] = data.P.values[k];
        }
        for j in 0..self.n {
            self.p_diag[j] = self.matrix.values[self.diag[j]];
        }
        for (k, &dst) in self.a_map.iter().enumerate() {
            self.matrix.values[dst] = data.A.values[k];
        }
        for (k, &dst) in self.g_map.iter().enumerate() {
            self.matrix.values[dst] = data.G.values[k];
        }
    }

    fn set_regularization(&mut self, rho: f64, delta: f64, w: &[f64]) {
        let (n, p) = (self.n, self.p);
        for j in 0..n {
            self.matrix.values[self.diag[j]] = self.p_diag[j] + rho;
        }
        for i in 0..p {
            self.matrix.values[self.diag[n + i]] = -delta;
        }
        for i in 0..self.m {
            self.matrix.values[self.diag[n + p + i]] = -(w[i] + delta);
        }
    }

    /// Factorizes the matrix for the given penalties and scaling `w`. On a
    /// sign failure both penalties are multiplied by `retry_factor` (for the
    /// factorization only) and the factorization is retried up to
    /// `retry_max` times. Returns the number of retries used.
    pub fn factorize(
        &mut self,
        delta: f64,
        rho: f64,
        w: &[f64],
        retry_factor: f64,
        retry_max: usize,
    ) -> Result<usize, KktError> {
        if w.len() != self.m {
            return Err(StructureError::Dimension {
                what: "scaling W",
                expected: self.m,
                got: w.len(),
            }
            .into());
        }
        let (mut d, mut r) = (delta, rho);
        for attempt in 0..=retry_max {
            self.set_regularization(r, d, w);
            match self.factor.refactor(&self.matrix, &self.signs) {
                Ok(()) => {
                    self.last_retries = attempt;
                    self.used_reg = (d, r);
                    return Ok(attempt);
                }
                Err(FactorError::QuasiDefinite { .. }) => {
                    d *= retry_factor;
                    r *= retry_factor;
                }
                Err(FactorError::Structure(e)) => return Err(e.into()),
            }
        }
        Err(KktError::RetriesExhausted { retries: retry_max })
    }

    /// Solves the reduced system for `(Δx, Δy, Δz)` and recovers
    /// `Δs = Z⁻¹(rˢ - S Δz)`. `rz` is the unreduced `rᶻ`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_newton(
        &mut self,
        rx: &[f64],
        ry: &[f64],
        rz: &[f64],
        rs: &[f64],
        s: &[f64],
        z: &[f64],
        out: &mut Direction,
    ) -> Result<(), StructureError> {
        let (n, p, m) = (self.n, self.p, self.m);
        self.rhs[..n].copy_from_slice(rx);
        self.rhs[n..n + p].copy_from_slice(ry);
        for i in 0..m {
            self.rhs[n + p + i] = rz[i] - rs[i] / z[i];
        }
        self.target.copy_from_slice(&self.rhs);
        self.factor.solve_in_place(&mut self.rhs, &mut self.work)?;
        self.refine()?;
        out.dx.copy_from_slice(&self.rhs[..n]);
        out.dy.copy_from_slice(&self.rhs[n..n + p]);
        out.dz.copy_from_slice(&self.rhs[n + p..]);
        // Δs = Z⁻¹(rˢ - S Δz), or equivalently Δs = rᶻ - GΔx + δΔz. The first
        // form cancels badly when z ≪ s, so the second is used there.
        let delta = self.used_reg.0;
        for i in 0..m {
            out.ds[i] = if s[i] > z[i] {
                let col = n + p + i;
                let mut gx = 0.0;
                for k in self.matrix.col_ptr[col]..self.matrix.col_ptr[col + 1] {
                    let r = self.matrix.row_idx[k];
                    if r < n {
                        gx += self.matrix.values[k] * out.dx[r];
                    }
                }
                rz[i] - gx + delta * out.dz[i]
            } else {
                (rs[i] - s[i] * out.dz[i]) / z[i]
            };
        }
        Ok(())
    }

    /// Iterative refinement of the solution in `rhs` against `target`. The
    /// factorization is of the same matrix, so this only removes rounding
    /// error, which grows as the penalties shrink and `W` spreads out.
    /// Stops on the componentwise backward error
    /// `max_i |r_i| / (|K||x| + |b|)_i`, since the blocks of the right-hand
    /// side can differ in size by many orders of magnitude.
    fn refine(&mut self) -> Result<(), StructureError> {
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_MAX {
            self.resid.copy_from_slice(&self.target);
            self.matrix.symv_upper(-1.0, &self.rhs, &mut self.resid);
            for (d, t) in self.scale.iter_mut().zip(&self.target) {
                *d = t.abs();
            }
            abs_symv_upper(&self.matrix, &self.rhs, &mut self.scale);
            let mut omega = 0.0f64;
            for (r, d) in self.resid.iter().zip(&self.scale) {
                if *r != 0.0 {
                    omega = omega.max(if *d > 0.0 { r.abs() / d } else { f64::INFINITY });
                }
            }
            if omega <= REFINE_TOL || omega >= 0.5 * last {
                break;
            }
            last = omega;
            self.factor.solve_in_place(&mut self.resid, &mut self.work)?;
            for (x, d) in self.rhs.iter_mut().zip(&self.resid) {
                *x += d;
            }
        }
        Ok(())
    }

    /// Solves with an arbitrary right-hand side of length `n + p + m` in place.
    pub fn solve_in_place(&mut self, rhs: &mut [f64]) -> Result<(), StructureError> {
        self.factor.solve_in_place(rhs, &mut self.work)
    }

    pub fn factorization(&self) -> &LdlFactorization {
        &self.factor
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn last_retries(&self) -> usize {
        self.last_retries
    }

    /// `(δ, ρ)` used by the last successful factorization.
    pub fn used_regularization(&self) -> (f64, f64) {
        self.used_reg
    }

    pub fn dim(&self) -> usize {
        self.n + self.p + self.m
    }
}

const REFINE_MAX: usize = 8;
const REFINE_TOL: f64 = 2.0 * f64::EPSILON;

/// `y += |K||x|` for `K` stored as its upper triangle.
fn abs_symv_upper(k: &CscMatrix, x: &[f64], y: &mut [f64]) {
    for j in 0..k.ncols {
        for p in k.col_ptr[j]..k.col_ptr[j + 1] {
            let (i, v) = (k.row_idx[p], k.values[p].abs());
            y[i] += v * x[j].abs();
            if i != j {
                y[j] += v * x[i].abs();
            }
        }
    }
}

/// For each entry of `m^T` (in its CSC order), the index of the same entry in `m`.
fn transpose_positions(m: &CscMatrix) -> Vec<usize> {
    let mut counts = vec![0usize; m.nrows + 1];
    for &r in &m.row_idx {
        counts[r + 1] += 1;
    }
    for i in 0..m.nrows {
        counts[i + 1] += counts[i];
    }
    let mut back = vec![0usize; m.nnz()];
    for j in 0..m.ncols {
        for k in m.col_ptr[j]..m.col_ptr[j + 1] {
            let r = m.row_idx[k];
            back[counts[r]] = k;
            counts[r] += 1;
        }
    }
    back
}
