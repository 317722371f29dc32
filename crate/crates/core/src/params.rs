//! Equation coefficients and the boundary value at `x → -∞`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Backgrounds with modulus at or below this value are only accepted in
/// zero-boundary limit mode.
pub const ZBC_LIMIT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("non-finite coefficient or boundary value")]
    NonFinite,
    #[error("background modulus must be positive (got {0})")]
    ZeroBackground(f64),
    #[error("background modulus {0:e} is below {ZBC_LIMIT_THRESHOLD:e}; enable zbc-limit mode")]
    NeedsZbcLimit(f64),
    #[error("zbc-limit mode requires a background modulus <= {ZBC_LIMIT_THRESHOLD:e} (got {0:e})")]
    NotZbcScale(f64),
}

/// Coefficients `α2..α5` of the fifth-order equation together with the
/// complex background `ψ-`.
///
/// `psi0` is computed once from `psi_minus` and stored; every other module
/// reads it from here instead of recomputing `|ψ-|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    psi_minus: Complex64,
    psi0: f64,
    zbc_limit: bool,
}

impl ModelParams {
    /// Nonzero-background parameters. Requires `|ψ-| > 1e-4`.
    pub fn new(alphas: [f64; 4], psi_minus: Complex64) -> Result<Self, ParamsError> {
        Self::build(alphas, psi_minus, false)
    }

    /// Parameters for studying the `ψ0 → 0` limit. Requires `0 < |ψ-| <= 1e-4`.
    pub fn zbc_limit(alphas: [f64; 4], psi_minus: Complex64) -> Result<Self, ParamsError> {
        Self::build(alphas, psi_minus, true)
    }

    /// Picks the mode from the modulus of `psi_minus`.
    pub fn auto(alphas: [f64; 4], psi_minus: Complex64) -> Result<Self, ParamsError> {
        let limit = psi_minus.norm() <= ZBC_LIMIT_THRESHOLD;
        Self::build(alphas, psi_minus, limit)
    }

    fn build(alphas: [f64; 4], psi_minus: Complex64, zbc_limit: bool) -> Result<Self, ParamsError> {
        if alphas.iter().any(|a| !a.is_finite()) || !psi_minus.re.is_finite() || !psi_minus.im.is_finite()
        {
            return Err(ParamsError::NonFinite);
        }
        let psi0 = psi_minus.norm();
        if psi0 <= 0.0 {
            return Err(ParamsError::ZeroBackground(psi0));
        }
        if zbc_limit && psi0 > ZBC_LIMIT_THRESHOLD {
            return Err(ParamsError::NotZbcScale(psi0));
        }
        if !zbc_limit && psi0 <= ZBC_LIMIT_THRESHOLD {
            return Err(ParamsError::NeedsZbcLimit(psi0));
        }
        let [alpha2, alpha3, alpha4, alpha5] = alphas;
        Ok(Self { alpha2, alpha3, alpha4, alpha5, psi_minus, psi0, zbc_limit })
    }

    pub fn psi_minus(&self) -> Complex64 {
        self.psi_minus
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn is_zbc_limit(&self) -> bool {
        self.zbc_limit
    }

    pub fn alphas(&self) -> [f64; 4] {
        [self.alpha2, self.alpha3, self.alpha4, self.alpha5]
    }

    /// Same background, different coefficients.
    pub fn with_alphas(&self, alphas: [f64; 4]) -> Self {
        let [alpha2, alpha3, alpha4, alpha5] = alphas;
        Self { alpha2, alpha3, alpha4, alpha5, ..*self }
    }
}
