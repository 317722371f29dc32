//! Uniformized spectral geometry.
//!
//! The two-sheeted relation `λ² = k² + ψ0²` is resolved by the variable
//! `z = k + λ`, so that
//!
//! ```text
//! k(z) = (z - ψ0²/z) / 2,    λ(z) = (z + ψ0²/z) / 2,
//! θ(x, t, z) = λ(z) · (x + Ω(k(z)) · t).
//! ```
//!
//! Everything here is a pure function of its arguments.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lax;
use crate::params::ModelParams;

/// Points closer than this to the origin are rejected.
pub const EPS_ZERO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("spectral point {0} is too close to z = 0")]
    NearOrigin(Complex64),
    #[error("spectral point is not finite")]
    NonFinite,
    #[error(transparent)]
    Lax(#[from] lax::LaxError),
}

/// A point of the uniformized spectral plane, guaranteed `|z| >= EPS_ZERO`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct SpectralPoint(Complex64);

impl SpectralPoint {
    pub fn new(z: Complex64) -> Result<Self, SpectralError> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(SpectralError::NonFinite);
        }
        if z.norm() < EPS_ZERO {
            return Err(SpectralError::NearOrigin(z));
        }
        Ok(Self(z))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self, SpectralError> {
        Self::new(Complex64::new(re, im))
    }

    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }

    /// The image under `z ↦ -ψ0²/z`.
    pub fn involution(self, p: &ModelParams) -> Self {
        Self(-p.psi0() * p.psi0() / self.0)
    }

    pub fn conj(self) -> Self {
        Self(self.0.conj())
    }
}

impl TryFrom<Complex64> for SpectralPoint {
    type Error = SpectralError;
    fn try_from(z: Complex64) -> Result<Self, Self::Error> {
        Self::new(z)
    }
}

impl From<SpectralPoint> for Complex64 {
    fn from(p: SpectralPoint) -> Self {
        p.0
    }
}

/// Which half of the spectral plane a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    DPlus,
    DMinus,
    /// Real axis or the circle `|z| = ψ0`.
    Sigma,
}

/// Selects the time-dispersion polynomial `Ω(k)` used in `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    /// The polynomial exactly as printed with the equation.
    #[default]
    Printed,
    /// Extracted from the boundary Lax matrices (see [`crate::lax`]).
    Lax,
    /// Background flow of the AKNS hierarchy with the orientation of each
    /// `K_n` term taken from the equation itself.
    Hierarchy,
}

impl fmt::Display for DispersionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DispersionMode::Printed => "printed",
            DispersionMode::Lax => "lax",
            DispersionMode::Hierarchy => "hierarchy",
        })
    }
}

pub fn k_of_z(z: SpectralPoint, p: &ModelParams) -> Complex64 {
    let z = z.z();
    0.5 * (z - p.psi0() * p.psi0() / z)
}

pub fn lambda_of_z(z: SpectralPoint, p: &ModelParams) -> Complex64 {
    let z = z.z();
    0.5 * (z + p.psi0() * p.psi0() / z)
}

/// `dk/dz`
pub fn k_prime(z: SpectralPoint, p: &ModelParams) -> Complex64 {
    let z = z.z();
    0.5 * (1.0 + p.psi0() * p.psi0() / (z * z))
}

/// `dλ/dz`
pub fn lambda_prime(z: SpectralPoint, p: &ModelParams) -> Complex64 {
    let z = z.z();
    0.5 * (1.0 - p.psi0() * p.psi0() / (z * z))
}

/// Printed dispersion polynomial
/// `α5(-16k⁴+8k²-6ψ0²) + α4(8k³-4kψ0²) + α3(4k²-2ψ0²) - 2α2 k`.
pub fn omega_printed_k(k: Complex64, p: &ModelParams) -> Complex64 {
    let s = p.psi0() * p.psi0();
    let k2 = k * k;
    p.alpha5 * (-16.0 * k2 * k2 + 8.0 * k2 - 6.0 * s)
        + p.alpha4 * (8.0 * k2 * k - 4.0 * k * s)
        + p.alpha3 * (4.0 * k2 - 2.0 * s)
        - 2.0 * p.alpha2 * k
}

fn domega_printed_dk(k: Complex64, p: &ModelParams) -> Complex64 {
    let s = p.psi0() * p.psi0();
    let k2 = k * k;
    p.alpha5 * (-64.0 * k2 * k + 16.0 * k)
        + p.alpha4 * (24.0 * k2 - 4.0 * s)
        + p.alpha3 * 8.0 * k
        - 2.0 * p.alpha2
}

/// Real orientation sign of the `n`-th flow: `Re(c_n · iⁿ)` where `c_n` is
/// the coefficient multiplying `α_n K_n` in the equation (`1, -i, 1, -i`).
pub fn hierarchy_sign(n: usize) -> f64 {
    let c = if n % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, -1.0) };
    (c * Complex64::i().powu(n as u32)).re
}

/// Coefficients of `P_n(k)`, the polynomial part of `(2k)^(n-1) · k/λ` for
/// large `k`, as `(power of k, coefficient)` pairs.
pub fn hierarchy_terms(n: usize, psi0: f64) -> Vec<(u32, f64)> {
    assert!(n >= 1);
    let scale = 2f64.powi(n as i32 - 1);
    let mut terms = Vec::new();
    // binomial(-1/2, j), updated incrementally
    let mut binom = 1.0;
    for j in 0..=((n - 1) / 2) {
        if j > 0 {
            binom *= (-0.5 - (j as f64 - 1.0)) / j as f64;
        }
        let power = (n - 1 - 2 * j) as u32;
        terms.push((power, scale * binom * psi0.powi(2 * j as i32)));
    }
    terms
}

fn eval_poly(terms: &[(u32, f64)], k: Complex64) -> Complex64 {
    terms.iter().map(|&(e, c)| c * k.powu(e)).sum()
}

fn eval_poly_dk(terms: &[(u32, f64)], k: Complex64) -> Complex64 {
    terms
        .iter()
        .filter(|(e, _)| *e > 0)
        .map(|&(e, c)| c * e as f64 * k.powu(e - 1))
        .sum()
}

/// Hierarchy dispersion `Σ_n α_n · sign_n · P_n(k)`.
pub fn omega_hierarchy_k(k: Complex64, p: &ModelParams) -> Complex64 {
    p.alphas()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, a)| {
            let n = i + 2;
            *a * hierarchy_sign(n) * eval_poly(&hierarchy_terms(n, p.psi0()), k)
        })
        .sum()
}

fn domega_hierarchy_dk(k: Complex64, p: &ModelParams) -> Complex64 {
    p.alphas()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, a)| {
            let n = i + 2;
            *a * hierarchy_sign(n) * eval_poly_dk(&hierarchy_terms(n, p.psi0()), k)
        })
        .sum()
}

/// `Ω(k(z))` in the selected mode.
pub fn dispersion_omega(
    z: SpectralPoint,
    p: &ModelParams,
    mode: DispersionMode,
) -> Result<Complex64, SpectralError> {
    match mode {
        DispersionMode::Printed => Ok(omega_printed_k(k_of_z(z, p), p)),
        DispersionMode::Hierarchy => Ok(omega_hierarchy_k(k_of_z(z, p), p)),
        DispersionMode::Lax => Ok(lax::omega_from_lax(z, p)?),
    }
}

/// `dΩ/dz`. Analytic for the polynomial modes; the Lax mode uses a central
/// difference of step `1e-5·|z|`.
pub fn dispersion_omega_dz(
    z: SpectralPoint,
    p: &ModelParams,
    mode: DispersionMode,
) -> Result<Complex64, SpectralError> {
    let k = k_of_z(z, p);
    match mode {
        DispersionMode::Printed => Ok(domega_printed_dk(k, p) * k_prime(z, p)),
        DispersionMode::Hierarchy => Ok(domega_hierarchy_dk(k, p) * k_prime(z, p)),
        DispersionMode::Lax => {
            let h = 1e-5 * z.z().norm();
            let fwd = lax::omega_from_lax(SpectralPoint::new(z.z() + h)?, p)?;
            let bwd = lax::omega_from_lax(SpectralPoint::new(z.z() - h)?, p)?;
            Ok((fwd - bwd) / (2.0 * h))
        }
    }
}

/// Precomputed `Ω` and `dΩ/dz` at one spectral point, so that repeated phase
/// evaluations on a grid do not redo the dispersion work.
#[derive(Debug, Clone, Copy)]
pub struct PhaseData {
    pub z: SpectralPoint,
    pub lambda: Complex64,
    pub lambda_prime: Complex64,
    pub omega: Complex64,
    pub omega_dz: Complex64,
}

impl PhaseData {
    pub fn new(z: SpectralPoint, p: &ModelParams, mode: DispersionMode) -> Result<Self, SpectralError> {
        Ok(Self {
            z,
            lambda: lambda_of_z(z, p),
            lambda_prime: lambda_prime(z, p),
            omega: dispersion_omega(z, p, mode)?,
            omega_dz: dispersion_omega_dz(z, p, mode)?,
        })
    }

    #[inline]
    pub fn theta(&self, x: f64, t: f64) -> Complex64 {
        self.lambda * (x + self.omega * t)
    }

    #[inline]
    pub fn theta_prime(&self, x: f64, t: f64) -> Complex64 {
        self.lambda_prime * (x + self.omega * t) + self.lambda * self.omega_dz * t
    }
}

/// `θ(x,t,z) = λ(z)·(x + Ω t)`.
pub fn theta(
    x: f64,
    t: f64,
    z: SpectralPoint,
    p: &ModelParams,
    mode: DispersionMode,
) -> Result<Complex64, SpectralError> {
    Ok(lambda_of_z(z, p) * (x + dispersion_omega(z, p, mode)? * t))
}

/// `∂θ/∂z = λ'(x + Ω t) + λ · (dΩ/dk) · k' · t`.
pub fn theta_prime_z(
    x: f64,
    t: f64,
    z: SpectralPoint,
    p: &ModelParams,
    mode: DispersionMode,
) -> Result<Complex64, SpectralError> {
    Ok(PhaseData::new(z, p, mode)?.theta_prime(x, t))
}

/// Tolerance band for classifying points onto `Σ`.
pub fn region_tolerance(z: Complex64) -> f64 {
    1e-12 * z.norm_sqr().max(1.0)
}

pub fn region_of(z: SpectralPoint, p: &ModelParams) -> RegionTag {
    let z = z.z();
    let s = (z.norm_sqr() - p.psi0() * p.psi0()) * z.im;
    let eps = region_tolerance(z);
    if s > eps {
        RegionTag::DPlus
    } else if s < -eps {
        RegionTag::DMinus
    } else {
        RegionTag::Sigma
    }
}
