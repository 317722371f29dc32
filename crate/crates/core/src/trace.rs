//! Reflectionless trace formulae for `s11` and `s22`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;
use crate::spectrum::PoleOrder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("z = {0} is at a pole of the trace formula")]
    Pole(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvaluation {
    pub z: Complex64,
    pub s11: Complex64,
    pub s22: Complex64,
    pub pole_order: PoleOrder,
}

fn pole_tol(z: Complex64) -> f64 {
    1e-12 * (1.0 + z.norm())
}

/// `(z − z_n)(z + ψ0²/z_n*)` and `(z − z_n*)(z + ψ0²/z_n)`.
fn factors(z: Complex64, zn: Complex64, psi0: f64) -> (Complex64, Complex64) {
    let s = psi0 * psi0;
    ((z - zn) * (z + s / zn.conj()), (z - zn.conj()) * (z + s / zn))
}

fn power(order: PoleOrder) -> i32 {
    match order {
        PoleOrder::Simple => 1,
        PoleOrder::Double => 2,
    }
}

pub fn s11_reflectionless(
    z: Complex64,
    eigenvalues: &[Complex64],
    p: &ModelParams,
    order: PoleOrder,
) -> Result<Complex64, TraceError> {
    let s = p.psi0() * p.psi0();
    let mut acc = Complex64::new(1.0, 0.0);
    for &zn in eigenvalues {
        if (z - zn.conj()).norm() < pole_tol(z) || (z + s / zn).norm() < pole_tol(z) {
            return Err(TraceError::Pole(z));
        }
        let (num, den) = factors(z, zn, p.psi0());
        acc *= (num / den).powi(power(order));
    }
    Ok(acc)
}

pub fn s22_reflectionless(
    z: Complex64,
    eigenvalues: &[Complex64],
    p: &ModelParams,
    order: PoleOrder,
) -> Result<Complex64, TraceError> {
    let s = p.psi0() * p.psi0();
    let mut acc = Complex64::new(1.0, 0.0);
    for &zn in eigenvalues {
        if (z - zn).norm() < pole_tol(z) || (z + s / zn.conj()).norm() < pole_tol(z) {
            return Err(TraceError::Pole(z));
        }
        let (num, den) = factors(z, zn, p.psi0());
        acc *= (den / num).powi(power(order));
    }
    Ok(acc)
}

/// Both coefficients at one point; `None` entries are poles.
pub fn evaluate(z: Complex64, eigenvalues: &[Complex64], p: &ModelParams, order: PoleOrder) -> Option<TraceEvaluation> {
    let s11 = s11_reflectionless(z, eigenvalues, p, order).ok()?;
    let s22 = s22_reflectionless(z, eigenvalues, p, order).ok()?;
    Some(TraceEvaluation { z, s11, s22, pole_order: order })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contour {
    /// The real axis, sampled through `z = ψ0 tan(u)`, `u ∈ (−π/2, π/2)`.
    Real,
    /// The circle `|z| = ψ0`.
    Circle,
}

pub fn contour_points(contour: Contour, p: &ModelParams, samples: usize) -> Vec<Complex64> {
    let n = samples as f64;
    (0..samples)
        .map(|j| {
            let u = (j as f64 + 0.5) / n;
            match contour {
                Contour::Real => Complex64::new(p.psi0() * (PI * (u - 0.5)).tan(), 0.0),
                Contour::Circle => Complex64::from_polar(p.psi0(), 2.0 * PI * u),
            }
        })
        .collect()
}
