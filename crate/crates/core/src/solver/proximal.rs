//! Proximal estimates and the penalty/estimate update run after every step.

use crate::problem::{dot, Iterate};

/// Upper clamp on the complementarity reduction ratio `r`.
pub const MAX_REDUCTION: f64 = 0.9;

/// Proximal centres `(ξ, λ, ν)` and penalties `(δ, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximalState {
    pub xi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub delta: f64,
    pub rho: f64,
}

impl ProximalState {
    pub fn new(n: usize, p: usize, m: usize, delta: f64, rho: f64) -> Self {
        ProximalState {
            xi: vec![0.0; n],
            lambda: vec![0.0; p],
            nu: vec![0.0; m],
            delta,
            rho,
        }
    }
}

/// Which estimates an update accepted, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateUpdate {
    pub dual_estimates: bool,
    pub primal_estimate: bool,
}

/// Relative complementarity reduction `|s_kᵀz_k - s_{k+1}ᵀz_{k+1}| / s_kᵀz_k`,
/// clamped to `[0, MAX_REDUCTION]`. Zero when there are no inequalities.
pub fn complementarity_reduction(prev: &Iterate, next: &Iterate) -> f64 {
    if prev.s.is_empty() {
        return 0.0;
    }
    let before = dot(&prev.s, &prev.z);
    if !(before > 0.0) {
        return 0.0;
    }
    let after = dot(&next.s, &next.z);
    ((before - after).abs() / before).clamp(0.0, MAX_REDUCTION)
}

/// Penalty and estimate update.
///
/// If the primal residual dropped to at most 95% of its previous value the
/// multiplier estimates move to the new `(y, z)` and `δ` shrinks by `(1 - r)`;
/// otherwise the estimates stay and `δ` shrinks by `(1 - r/3)`. The same rule
/// drives `ξ` and `ρ` from the dual residual. Both penalties are floored.
#[allow(clippy::too_many_arguments)]
pub fn update_estimates(
    prev: &Iterate,
    next: &Iterate,
    prox: &mut ProximalState,
    primal_res_prev: f64,
    primal_res_next: f64,
    dual_res_prev: f64,
    dual_res_next: f64,
    delta_min: f64,
    rho_min: f64,
) -> EstimateUpdate {
    let r = complementarity_reduction(prev, next);
    let mut upd = EstimateUpdate::default();
    if primal_res_next <= 0.95 * primal_res_prev {
        prox.lambda.copy_from_slice(&next.y);
        prox.nu.copy_from_slice(&next.z);
        prox.delta *= 1.0 - r;
        upd.dual_estimates = true;
    } else {
        prox.delta *= 1.0 - r / 3.0;
    }
    if dual_res_next <= 0.95 * dual_res_prev {
        prox.xi.copy_from_slice(&next.x);
        prox.rho *= 1.0 - r;
        upd.primal_estimate = true;
    } else {
        prox.rho *= 1.0 - r / 3.0;
    }
    prox.delta = prox.delta.max(delta_min);
    prox.rho = prox.rho.max(rho_min);
    upd
}
