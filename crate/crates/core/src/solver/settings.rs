use std::time::Duration;

use crate::error::StructureError;

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Absolute accuracy of the termination test.
    pub eps_abs: f64,
    /// Relative accuracy of the termination test.
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary parameter.
    pub tau: f64,
    /// Initial dual (equality/inequality) regularization.
    pub delta0: f64,
    /// Initial primal proximal weight.
    pub rho0: f64,
    pub delta_min: f64,
    pub rho_min: f64,
    /// Factor applied to the regularization when a factorization fails.
    pub reg_retry_factor: f64,
    pub reg_retry_max: usize,
    /// Ruiz passes; 0 disables equilibration.
    pub ruiz_iters: usize,
    pub ruiz_tol: f64,
    pub time_limit: Option<Duration>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            eps_abs: 1e-8,
            eps_rel: 1e-9,
            max_iter: 250,
            tau: 0.995,
            delta0: 1e-4,
            rho0: 1e-6,
            delta_min: 1e-10,
            rho_min: 1e-10,
            reg_retry_factor: 100.0,
            reg_retry_max: 10,
            ruiz_iters: 10,
            ruiz_tol: 1e-3,
            time_limit: None,
        }
    }
}

impl Settings {
    /// Tolerances for fast, low-accuracy runs (`1e-3` absolute, `1e-4` relative).
    pub fn low_accuracy() -> Self {
        Settings {
            eps_abs: 1e-3,
            eps_rel: 1e-4,
            ..Settings::default()
        }
    }

    pub fn validate(&self) -> Result<(), StructureError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.eps_abs) {
            return Err(StructureError::Settings("eps_abs must be positive"));
        }
        if !(self.eps_rel.is_finite() && self.eps_rel >= 0.0) {
            return Err(StructureError::Settings("eps_rel must be non-negative"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(StructureError::Settings("tau must lie in (0, 1)"));
        }
        if !(positive(self.delta0) && positive(self.rho0) && positive(self.delta_min) && positive(self.rho_min)) {
            return Err(StructureError::Settings("regularization parameters must be positive"));
        }
        if self.delta_min > self.delta0 || self.rho_min > self.rho0 {
            return Err(StructureError::Settings("regularization floors exceed initial values"));
        }
        if !(self.reg_retry_factor > 1.0 && self.reg_retry_factor.is_finite()) {
            return Err(StructureError::Settings("reg_retry_factor must exceed 1"));
        }
        if !(self.ruiz_tol >= 0.0) {
            return Err(StructureError::Settings("ruiz_tol must be non-negative"));
        }
        Ok(())
    }
}
