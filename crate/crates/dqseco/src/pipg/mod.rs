//! Extrapolated proportional-integral projected gradient (PIPG).
//!
//! Solves `min ½ λ ‖ẑ‖² + q̂ᵀẑ  s.t.  Ĥẑ = ĥ, ẑ ∈ D̂`. [`generic`] works on an
//! explicit matrix and serves as the oracle; [`custom`] runs the same
//! recurrences block by block on a [`crate::precondition::Hatted`] problem.

pub mod custom;
pub mod generic;

pub use custom::{pipg_custom, CustomOutcome, WarmStart};
pub use generic::{pipg_generic, GenericOutcome};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipgError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

/// Step sizes `α = 2 / (λ + √(λ² + 4ωσ))`, `β = ωα`.
pub fn step_sizes(lambda: f64, sigma: f64, omega: f64) -> Result<(f64, f64), PipgError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PipgError::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) || !(omega > 0.0 && omega.is_finite()) {
        return Err(PipgError::InvalidInput(format!("need lambda >= 0 and omega > 0, got {lambda}, {omega}")));
    }
    let alpha = 2.0 / (lambda + (lambda * lambda + 4.0 * omega * sigma).sqrt());
    Ok((alpha, omega * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopTolerances {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub j_check: usize,
    pub j_max: usize,
}

impl Default for StopTolerances {
    fn default() -> Self {
        Self { eps_abs: 1e-8, eps_rel: 1e-6, j_check: 10, j_max: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipgSettings {
    pub rho: f64,
    pub omega: f64,
    pub tol: StopTolerances,
}

impl Default for PipgSettings {
    fn default() -> Self {
        Self { rho: 1.6, omega: 1.0, tol: StopTolerances::default() }
    }
}

impl PipgSettings {
    pub fn validate(&self) -> Result<(), PipgError> {
        let t = &self.tol;
        if !(self.rho > 0.0 && self.rho < 2.0) {
            return Err(PipgError::InvalidInput(format!("rho must lie in (0, 2), got {}", self.rho)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(PipgError::InvalidInput(format!("omega must be positive, got {}", self.omega)));
        }
        if !(t.eps_abs >= 0.0 && t.eps_rel >= 0.0) || t.j_check == 0 || t.j_max == 0 {
            return Err(PipgError::InvalidInput("tolerances must be nonnegative and counts positive".into()));
        }
        Ok(())
    }
}

/// Termination test on consecutive iterates given their `∞`-norms and the
/// `∞`-norms of their differences.
pub fn stopping(
    dz: f64,
    z_new: f64,
    z_old: f64,
    dw: f64,
    w_new: f64,
    w_old: f64,
    eps_abs: f64,
    eps_rel: f64,
) -> bool {
    dz <= eps_abs + eps_rel * z_new.max(z_old) && dw <= eps_abs + eps_rel * w_new.max(w_old)
}

/// One stopping evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRecord {
    pub iteration: usize,
    pub primal_change: f64,
    pub dual_change: f64,
}
