//! Dense complex linear algebra: Hermitian eigendecomposition, PSD tests and
//! factorizations, least squares. Every tolerance decision in the crate goes
//! through [`TolerancePolicy`].

mod eigen;
mod factor;
mod matrix;

pub use eigen::{hermitian_eig, EigenResult};
pub use factor::{
    lstsq_solve, min_eigenvalue, psd_check, psd_factor, psd_factor_with, LstsqSolution,
    PsdFactor, TieBreak,
};
pub use matrix::{ComplexMatrix, ONE, ZERO};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances used by every numerical decision. All are relative to a
/// scale factor `max(1, ‖M‖)` unless noted otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub hermiticity_tol: f64,
    pub psd_tol: f64,
    /// Relative to the largest eigenvalue magnitude, not to `max(1, ‖M‖)`.
    pub rank_cutoff: f64,
    pub residual_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            hermiticity_tol: 1e-10,
            psd_tol: 1e-9,
            rank_cutoff: 1e-9,
            residual_tol: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(hermiticity_tol: f64, psd_tol: f64, rank_cutoff: f64, residual_tol: f64) -> Result<Self> {
        let policy = Self {
            hermiticity_tol,
            psd_tol,
            rank_cutoff,
            residual_tol,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("hermiticity_tol", self.hermiticity_tol),
            ("psd_tol", self.psd_tol),
            ("rank_cutoff", self.rank_cutoff),
            ("residual_tol", self.residual_tol),
        ];
        for (name, value) in all {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be strictly positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// `max(1, norm)`: the scale every relative tolerance is measured against.
pub fn scale(norm: f64) -> f64 {
    norm.max(1.0)
}
