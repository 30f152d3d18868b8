//! Scalar pieces of the Mehrotra predictor-corrector step.

use crate::problem::dot;

/// Largest `α ∈ [0, 1]` with `v + α dv ≥ (1 - τ) v`, for `v > 0`.
pub fn step_size(v: &[f64], dv: &[f64], tau: f64) -> f64 {
    let mut alpha = 1.0f64;
    for (&vi, &di) in v.iter().zip(dv) {
        if di < 0.0 {
            alpha = alpha.min(tau * (vi / -di));
        }
    }
    alpha
}

/// Barrier parameter `μ = sᵀz / m` and Mehrotra's centering weight
/// `σ = clamp(η, 0, 1)³`, where `η` is the ratio of the mean complementarity
/// after the affine step to `μ`.
///
/// Returns `(σ, μ)`; both are zero when there are no inequalities.
pub fn centering_parameter(
    s: &[f64],
    z: &[f64],
    ds_aff: &[f64],
    dz_aff: &[f64],
    alpha_p_aff: f64,
    alpha_d_aff: f64,
) -> (f64, f64) {
    let m = s.len();
    if m == 0 {
        return (0.0, 0.0);
    }
    let mu = dot(s, z) / m as f64;
    let mut comp_aff = 0.0;
    for i in 0..m {
        comp_aff += (s[i] + alpha_p_aff * ds_aff[i]) * (z[i] + alpha_d_aff * dz_aff[i]);
    }
    let eta = if mu > 0.0 { (comp_aff / m as f64) / mu } else { 0.0 };
    let sigma = eta.clamp(0.0, 1.0).powi(3);
    (sigma, mu)
}

/// Right-hand side of the complementarity block for the combined
/// corrector/centering solve: `-s∘z - Δsᵃ∘Δzᵃ + σμ 1`.
pub fn corrector_rhs(s: &[f64], z: &[f64], ds_aff: &[f64], dz_aff: &[f64], sigma_mu: f64, out: &mut [f64]) {
    for i in 0..s.len() {
        out[i] = -s[i] * z[i] - ds_aff[i] * dz_aff[i] + sigma_mu;
    }
}
