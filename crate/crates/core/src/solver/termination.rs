#![allow(non_snake_case)]
//! Convergence test on primal feasibility, dual feasibility and duality gap.

use crate::problem::{dot, inf_norm, Iterate, QpProblem};

/// Residuals of an iterate and whether they meet the tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminationInfo {
    pub converged: bool,
    /// `‖[Ax - b; Gx - h + s]‖∞`
    pub primal_res: f64,
    /// `‖Px + c + Aᵀy + Gᵀz‖∞`
    pub dual_res: f64,
    /// `|xᵀPx + cᵀx + bᵀy + hᵀz|`
    pub gap: f64,
    /// `½xᵀPx + cᵀx`
    pub objective: f64,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub gap_tol: f64,
}

impl TerminationInfo {
    /// Largest ratio residual/tolerance; below one means converged.
    pub fn merit(&self) -> f64 {
        (self.primal_res / self.primal_tol)
            .max(self.dual_res / self.dual_tol)
            .max(self.gap / self.gap_tol)
    }
}

/// Buffers for evaluating [`TerminationInfo`] without allocating.
#[derive(Debug, Clone)]
pub(crate) struct TerminationWork {
    px: Vec<f64>,
    aty: Vec<f64>,
    gtz: Vec<f64>,
    ax: Vec<f64>,
    gx: Vec<f64>,
}

impl TerminationWork {
    pub(crate) fn new(n: usize, p: usize, m: usize) -> Self {
        TerminationWork {
            px: vec![0.0; n],
            aty: vec![0.0; n],
            gtz: vec![0.0; n],
            ax: vec![0.0; p],
            gx: vec![0.0; m],
        }
    }
}

/// `problem` must not carry box bounds (they are rows of `G` by now).
pub(crate) fn evaluate(
    problem: &QpProblem,
    it: &Iterate,
    eps_abs: f64,
    eps_rel: f64,
    w: &mut TerminationWork,
) -> TerminationInfo {
    for v in [&mut w.px, &mut w.aty, &mut w.gtz, &mut w.ax, &mut w.gx] {
        v.iter_mut().for_each(|e| *e = 0.0);
    }
    problem.P.symv_upper(1.0, &it.x, &mut w.px);
    problem.A.gemv_t(1.0, &it.y, &mut w.aty);
    problem.G.gemv_t(1.0, &it.z, &mut w.gtz);
    problem.A.gemv(1.0, &it.x, &mut w.ax);
    problem.G.gemv(1.0, &it.x, &mut w.gx);

    let mut primal_res = 0.0f64;
    for i in 0..w.ax.len() {
        primal_res = primal_res.max((w.ax[i] - problem.b[i]).abs());
    }
    for i in 0..w.gx.len() {
        primal_res = primal_res.max((w.gx[i] - problem.h[i] + it.s[i]).abs());
    }
    let primal_scale = inf_norm(&w.ax)
        .max(inf_norm(&problem.b))
        .max(inf_norm(&w.gx))
        .max(inf_norm(&problem.h))
        .max(inf_norm(&it.s));

    let mut dual_res = 0.0f64;
    for j in 0..w.px.len() {
        dual_res = dual_res.max((w.px[j] + problem.c[j] + w.aty[j] + w.gtz[j]).abs());
    }
    let dual_scale = inf_norm(&w.px)
        .max(inf_norm(&w.aty))
        .max(inf_norm(&w.gtz))
        .max(inf_norm(&problem.c));

    let xpx = dot(&it.x, &w.px);
    let cx = dot(&problem.c, &it.x);
    let by = dot(&problem.b, &it.y);
    let hz = dot(&problem.h, &it.z);
    let gap = (xpx + cx + by + hz).abs();
    let gap_scale = xpx.abs().max(cx.abs()).max(by.abs()).max(hz.abs());

    let primal_tol = eps_abs + eps_rel * primal_scale;
    let dual_tol = eps_abs + eps_rel * dual_scale;
    let gap_tol = eps_abs + eps_rel * gap_scale;
    TerminationInfo {
        converged: primal_res <= primal_tol && dual_res <= dual_tol && gap <= gap_tol,
        primal_res,
        dual_res,
        gap,
        objective: 0.5 * xpx + cx,
        primal_tol,
        dual_tol,
        gap_tol,
    }
}

/// Evaluates the termination criteria of `iterate` on `problem`. Box bounds,
/// if present, are treated as the trailing inequality rows they are converted
/// to by the solver (upper bounds first, then lower bounds).
pub fn check_termination(problem: &QpProblem, iterate: &Iterate, eps_abs: f64, eps_rel: f64) -> TerminationInfo {
    let owned;
    let prob = if problem.x_lb.is_some() || problem.x_ub.is_some() {
        owned = problem.with_box_as_inequalities();
        &owned
    } else {
        problem
    };
    let mut w = TerminationWork::new(prob.n(), prob.p(), prob.m());
    evaluate(prob, iterate, eps_abs, eps_rel, &mut w)
}
