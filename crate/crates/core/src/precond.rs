#![allow(non_snake_case)]
//! Ruiz equilibration of problem data.
//!
//! The symmetric matrix
//!
//! ```text
//! [ P  Aᵀ  Gᵀ ]
//! [ A  0   0  ]
//! [ G  0   0  ]
//! ```
//!
//! is scaled as `D M D` with `D = diag(d_x, d_y, d_z)`, one pass at a time,
//! each pass dividing every row and column by the square root of its
//! infinity norm. Afterwards the objective is scaled by a single factor
//! `c_scale`. The scaled problem is
//!
//! ```text
//! P̃ = c_scale · D_x P D_x    c̃ = c_scale · D_x c
//! Ã = D_y A D_x              b̃ = D_y b
//! G̃ = D_z G D_x              h̃ = D_z h
//! ```

use crate::error::StructureError;
use crate::problem::{inf_norm, Iterate, QpProblem};
use crate::sparse::CscMatrix;

/// Norms below/above these are clamped before taking the reciprocal square
/// root, so one pass never rescales by more than `1e4`.
const MIN_NORM: f64 = 1e-8;
const MAX_NORM: f64 = 1e8;

/// Diagonal scaling produced by [`ruiz_equilibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibration {
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
    pub d_z: Vec<f64>,
    pub c_scale: f64,
}

impl Equilibration {
    pub fn identity(n: usize, p: usize, m: usize) -> Self {
        Equilibration {
            d_x: vec![1.0; n],
            d_y: vec![1.0; p],
            d_z: vec![1.0; m],
            c_scale: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.c_scale == 1.0
            && self.d_x.iter().chain(&self.d_y).chain(&self.d_z).all(|&d| d == 1.0)
    }

    fn reset(&mut self) {
        self.d_x.iter_mut().for_each(|d| *d = 1.0);
        self.d_y.iter_mut().for_each(|d| *d = 1.0);
        self.d_z.iter_mut().for_each(|d| *d = 1.0);
        self.c_scale = 1.0;
    }

    /// Maps an iterate of the scaled problem back to the original problem.
    pub fn unscale_iterate(&self, scaled: &Iterate, out: &mut Iterate) -> Result<(), StructureError> {
        let check = |what, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(StructureError::Dimension { what, expected, got })
            }
        };
        check("x", self.d_x.len(), scaled.x.len())?;
        check("y", self.d_y.len(), scaled.y.len())?;
        check("z", self.d_z.len(), scaled.z.len())?;
        check("s", self.d_z.len(), scaled.s.len())?;
        check("x", self.d_x.len(), out.x.len())?;
        check("y", self.d_y.len(), out.y.len())?;
        check("z", self.d_z.len(), out.z.len())?;
        check("s", self.d_z.len(), out.s.len())?;
        let inv_c = 1.0 / self.c_scale;
        for (o, (v, d)) in out.x.iter_mut().zip(scaled.x.iter().zip(&self.d_x)) {
            *o = d * v;
        }
        for (o, (v, d)) in out.s.iter_mut().zip(scaled.s.iter().zip(&self.d_z)) {
            *o = v / d;
        }
        for (o, (v, d)) in out.y.iter_mut().zip(scaled.y.iter().zip(&self.d_y)) {
            *o = d * v * inv_c;
        }
        for (o, (v, d)) in out.z.iter_mut().zip(scaled.z.iter().zip(&self.d_z)) {
            *o = d * v * inv_c;
        }
        Ok(())
    }
}

/// Scratch space for in-place equilibration.
#[derive(Debug, Clone)]
pub(crate) struct RuizWork {
    norm_x: Vec<f64>,
    norm_y: Vec<f64>,
    norm_z: Vec<f64>,
}

impl RuizWork {
    pub(crate) fn new(n: usize, p: usize, m: usize) -> Self {
        RuizWork {
            norm_x: vec![0.0; n],
            norm_y: vec![0.0; p],
            norm_z: vec![0.0; m],
        }
    }
}

/// Equilibrates `problem`. Returns the scaled problem and the scaling.
///
/// Stops after `max_iters` passes or as soon as every nonzero row/column
/// norm of the stacked matrix is within `tol` of one.
pub fn ruiz_equilibrate(
    problem: &QpProblem,
    max_iters: usize,
    tol: f64,
) -> Result<(QpProblem, Equilibration), StructureError> {
    problem.validate()?;
    let (n, p, m) = (problem.n(), problem.p(), problem.m());
    let mut scaled = problem.clone();
    let mut eq = Equilibration::identity(n, p, m);
    let mut work = RuizWork::new(n, p, m);
    equilibrate_in_place(&mut scaled, &mut eq, &mut work, max_iters, tol);
    Ok((scaled, eq))
}

/// Equilibrates `data` in place; `eq` is overwritten. Does not allocate.
pub(crate) fn equilibrate_in_place(
    data: &mut QpProblem,
    eq: &mut Equilibration,
    work: &mut RuizWork,
    max_iters: usize,
    tol: f64,
) {
    eq.reset();
    for _ in 0..max_iters {
        stacked_norms(data, &mut work.norm_x, &mut work.norm_y, &mut work.norm_z);
        let worst = work
            .norm_x
            .iter()
            .chain(&work.norm_y)
            .chain(&work.norm_z)
            .filter(|&&v| v > 0.0)
            .fold(0.0f64, |w, &v| w.max((1.0 - v).abs()));
        if worst <= tol {
            break;
        }
        for v in work.norm_x.iter_mut().chain(work.norm_y.iter_mut()).chain(work.norm_z.iter_mut()) {
            *v = if *v == 0.0 { 1.0 } else { 1.0 / v.clamp(MIN_NORM, MAX_NORM).sqrt() };
        }
        scale_data(data, &work.norm_x, &work.norm_y, &work.norm_z, 1.0);
        for (d, s) in eq.d_x.iter_mut().zip(&work.norm_x) {
            *d *= s;
        }
        for (d, s) in eq.d_y.iter_mut().zip(&work.norm_y) {
            *d *= s;
        }
        for (d, s) in eq.d_z.iter_mut().zip(&work.norm_z) {
            *d *= s;
        }
    }

    // Objective scaling from the mean column norm of P and the size of c.
    let n = data.n();
    let mut mean_p = 0.0;
    if n > 0 {
        work.norm_x.iter_mut().for_each(|v| *v = 0.0);
        sym_col_norms(&data.P, &mut work.norm_x);
        mean_p = work.norm_x.iter().sum::<f64>() / n as f64;
    }
    let cost = mean_p.max(inf_norm(&data.c)).clamp(1.0, MAX_NORM);
    let c_scale = 1.0 / cost;
    if c_scale != 1.0 {
        data.P.values.iter_mut().for_each(|v| *v *= c_scale);
        data.c.iter_mut().for_each(|v| *v *= c_scale);
    }
    eq.c_scale = c_scale;
}

/// Applies scaling factors to `data` (see module docs).
pub(crate) fn scale_data(data: &mut QpProblem, dx: &[f64], dy: &[f64], dz: &[f64], c_scale: f64) {
    scale_matrix(&mut data.P, dx, dx, c_scale);
    scale_matrix(&mut data.A, dy, dx, 1.0);
    scale_matrix(&mut data.G, dz, dx, 1.0);
    for (v, d) in data.c.iter_mut().zip(dx) {
        *v *= d * c_scale;
    }
    for (v, d) in data.b.iter_mut().zip(dy) {
        *v *= d;
    }
    for (v, d) in data.h.iter_mut().zip(dz) {
        *v *= d;
    }
    if let Some(lb) = data.x_lb.as_mut() {
        for (v, d) in lb.iter_mut().zip(dx) {
            *v /= d;
        }
    }
    if let Some(ub) = data.x_ub.as_mut() {
        for (v, d) in ub.iter_mut().zip(dx) {
            *v /= d;
        }
    }
}

fn scale_matrix(m: &mut CscMatrix, row: &[f64], col: &[f64], factor: f64) {
    for j in 0..m.ncols {
        for k in m.col_ptr[j]..m.col_ptr[j + 1] {
            m.values[k] *= factor * row[m.row_idx[k]] * col[j];
        }
    }
}

fn sym_col_norms(P: &CscMatrix, out: &mut [f64]) {
    for (r, c, v) in P.iter() {
        out[c] = out[c].max(v.abs());
        out[r] = out[r].max(v.abs());
    }
}

/// Row/column infinity norms of the stacked symmetric matrix.
pub fn stacked_norms(data: &QpProblem, nx: &mut [f64], ny: &mut [f64], nz: &mut [f64]) {
    nx.iter_mut().for_each(|v| *v = 0.0);
    ny.iter_mut().for_each(|v| *v = 0.0);
    nz.iter_mut().for_each(|v| *v = 0.0);
    sym_col_norms(&data.P, nx);
    for (r, c, v) in data.A.iter() {
        nx[c] = nx[c].max(v.abs());
        ny[r] = ny[r].max(v.abs());
    }
    for (r, c, v) in data.G.iter() {
        nx[c] = nx[c].max(v.abs());
        nz[r] = nz[r].max(v.abs());
    }
}

/// Maps a solution of the scaled problem back to the original variables.
pub fn unscale_solution(eq: &Equilibration, scaled: &Iterate) -> Result<Iterate, StructureError> {
    let mut out = Iterate::zeros(eq.d_x.len(), eq.d_y.len(), eq.d_z.len());
    eq.unscale_iterate(scaled, &mut out)?;
    Ok(out)
}
