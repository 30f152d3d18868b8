//! Starting point.
//!
//! The initial `(ξ₀, λ₀, ν̃₀)` solves the regularized least-squares system
//!
//! ```text
//! [ P + ρ₀I   Aᵀ    Gᵀ          ] [ξ₀]   [-c]
//! [ A        -δ₀I   0           ] [λ₀] = [ b]
//! [ G         0    -(1 + δ₀)I   ] [ν̃₀]   [ h]
//! ```
//!
//! with slack `s̃₀ = -ν̃₀`. Slack and multiplier are then pushed into the
//! positive orthant by [`shift_to_interior`].

use crate::problem::dot;

/// Moves `(s̃, ν̃)` strictly inside the positive orthant, in place.
///
/// First each vector is lifted by `max(0, -1.5 min)`, then both are shifted
/// further by half the complementarity `(s̃ + Δs̃)ᵀ(ν̃ + Δν̃)` normalized by
/// the sum of the other vector.
pub fn shift_to_interior(s: &mut [f64], nu: &mut [f64]) {
    let m = s.len();
    if m == 0 {
        return;
    }
    let min_s = s.iter().copied().fold(f64::INFINITY, f64::min);
    let min_nu = nu.iter().copied().fold(f64::INFINITY, f64::min);
    let lift_s = (-1.5 * min_s).max(0.0);
    let lift_nu = (-1.5 * min_nu).max(0.0);
    s.iter_mut().for_each(|v| *v += lift_s);
    nu.iter_mut().for_each(|v| *v += lift_nu);

    let comp = dot(s, nu);
    let sum_s: f64 = s.iter().sum();
    let sum_nu: f64 = nu.iter().sum();
    let shift_s = 0.5 * comp / sum_nu;
    let shift_nu = 0.5 * comp / sum_s;
    if shift_s.is_finite() && shift_nu.is_finite() {
        s.iter_mut().for_each(|v| *v += shift_s);
        nu.iter_mut().for_each(|v| *v += shift_nu);
    }

    // Degenerate data (e.g. s̃ = ν̃ = 0) leaves zeros behind; move those
    // entries to 1.
    for v in s.iter_mut().chain(nu.iter_mut()) {
        if !(*v > 0.0 && v.is_finite()) {
            *v = 1.0;
        }
    }
}
