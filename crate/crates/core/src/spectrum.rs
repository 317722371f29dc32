//! Discrete eigenvalues and norming constants, their expansion to the full
//! symmetric set, and the theta condition.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;
use crate::spectral::{region_of, RegionTag, SpectralPoint};

/// Eigenvalues (or an eigenvalue and a symmetry image of another) closer
/// than this are rejected.
pub const COLLISION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid spectrum: {}", .0.join("; "))]
pub struct ValidationError(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleOrder {
    Simple,
    Double,
}

impl fmt::Display for PoleOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoleOrder::Simple => "simple",
            PoleOrder::Double => "double",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleEntry {
    pub z: Complex64,
    pub a_plus: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleEntry {
    pub z: Complex64,
    pub a_plus: Complex64,
    pub b_plus: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimpleSpectrum {
    pub entries: Vec<SimpleEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DoubleSpectrum {
    pub entries: Vec<DoubleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Spectrum {
    Simple(SimpleSpectrum),
    Double(DoubleSpectrum),
}

impl SimpleSpectrum {
    pub fn new(entries: &[(Complex64, Complex64)]) -> Self {
        Self { entries: entries.iter().map(|&(z, a_plus)| SimpleEntry { z, a_plus }).collect() }
    }
}

impl DoubleSpectrum {
    pub fn new(entries: &[(Complex64, Complex64, Complex64)]) -> Self {
        Self {
            entries: entries.iter().map(|&(z, a_plus, b_plus)| DoubleEntry { z, a_plus, b_plus }).collect(),
        }
    }
}

impl Spectrum {
    pub fn pole_order(&self) -> PoleOrder {
        match self {
            Spectrum::Simple(_) => PoleOrder::Simple,
            Spectrum::Double(_) => PoleOrder::Double,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Spectrum::Simple(s) => s.entries.len(),
            Spectrum::Double(s) => s.entries.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self {
            Spectrum::Simple(s) => s.entries.iter().map(|e| e.z).collect(),
            Spectrum::Double(s) => s.entries.iter().map(|e| e.z).collect(),
        }
    }

    fn a_plus(&self) -> Vec<Complex64> {
        match self {
            Spectrum::Simple(s) => s.entries.iter().map(|e| e.a_plus).collect(),
            Spectrum::Double(s) => s.entries.iter().map(|e| e.a_plus).collect(),
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Vec<String> {
        let mut out = validate_points(&self.eigenvalues(), &self.a_plus(), p);
        if let Spectrum::Double(s) = self {
            for (i, e) in s.entries.iter().enumerate() {
                if !finite(e.b_plus) {
                    out.push(format!("B{} is not finite", i + 1));
                }
            }
        }
        out
    }

    pub fn expand(&self, p: &ModelParams) -> Result<ExpandedSpectrum, ValidationError> {
        match self {
            Spectrum::Simple(s) => expand_simple(s, p),
            Spectrum::Double(s) => expand_double(s, p),
        }
    }

    /// Sum of `4 arg z_n` (simple) or `8 arg z_n` (double), not reduced.
    pub fn theta_condition_raw(&self) -> f64 {
        let factor = match self.pole_order() {
            PoleOrder::Simple => 4.0,
            PoleOrder::Double => 8.0,
        };
        factor * self.eigenvalues().iter().map(|z| z.arg()).sum::<f64>()
    }

    /// Asymptotic phase difference `arg ψ+ − arg ψ−` reduced to `[0, 2π)`.
    pub fn theta_condition(&self) -> f64 {
        reduce_angle(self.theta_condition_raw())
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn validate_points(zs: &[Complex64], a_plus: &[Complex64], p: &ModelParams) -> Vec<String> {
    let psi0 = p.psi0();
    let mut out = Vec::new();
    let mut in_domain = vec![false; zs.len()];
    for (i, (&z, &a)) in zs.iter().zip(a_plus).enumerate() {
        let n = i + 1;
        if !finite(z) {
            out.push(format!("z{n} is not finite"));
            continue;
        }
        if !finite(a) {
            out.push(format!("A{n} is not finite"));
        } else if a == Complex64::new(0.0, 0.0) {
            out.push(format!("A{n} must be nonzero"));
        }
        if z.im <= 0.0 {
            out.push(format!("z{n} not in fundamental domain (Im ≤ 0)"));
        } else if z.norm() <= psi0 {
            out.push(format!("|z{n}| ≤ ψ0"));
        } else if SpectralPoint::new(z).map(|s| region_of(s, p)) != Ok(RegionTag::DPlus) {
            out.push(format!("z{n} lies on the continuous spectrum"));
        } else {
            in_domain[i] = true;
        }
    }
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            if !(in_domain[i] && in_domain[j]) {
                continue;
            }
            let (a, b) = (zs[i], zs[j]);
            let scale = 1.0 + a.norm().max(b.norm());
            let images = [b, b.conj(), -psi0 * psi0 / b, -psi0 * psi0 / b.conj()];
            if images.iter().any(|&im| (a - im).norm() < COLLISION_TOL * scale) {
                out.push(format!("z{} collides with z{} or one of its symmetry images", j + 1, i + 1));
            }
        }
    }
    out
}

pub fn validate(s: &Spectrum, p: &ModelParams) -> Vec<String> {
    s.validate(p)
}

/// The `2N` points `ξ_n`, their images `ξ̂_n = −ψ0²/ξ_n`, and minus-side
/// norming data at `ξ̂_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedSpectrum {
    pub pole_order: PoleOrder,
    pub xi: Vec<Complex64>,
    pub xi_hat: Vec<Complex64>,
    pub a_minus_hat: Vec<Complex64>,
    pub b_minus_hat: Option<Vec<Complex64>>,
}

impl ExpandedSpectrum {
    /// Number of user-supplied eigenvalues `N`.
    pub fn n(&self) -> usize {
        self.xi.len() / 2
    }
}

fn expand_points(zs: &[Complex64], p: &ModelParams) -> (Vec<Complex64>, Vec<Complex64>) {
    let s = p.psi0() * p.psi0();
    let xi: Vec<Complex64> = zs.iter().copied().chain(zs.iter().map(|z| -s / z.conj())).collect();
    let xi_hat = xi.iter().map(|x| -s / x).collect();
    (xi, xi_hat)
}

pub fn expand_simple(sp: &SimpleSpectrum, p: &ModelParams) -> Result<ExpandedSpectrum, ValidationError> {
    let spec = Spectrum::Simple(sp.clone());
    let errs = spec.validate(p);
    if !errs.is_empty() {
        return Err(ValidationError(errs));
    }
    let zs = spec.eigenvalues();
    let (xi, xi_hat) = expand_points(&zs, p);
    let psi2 = p.psi_minus() * p.psi_minus();
    let a_minus_hat = sp
        .entries
        .iter()
        .map(|e| psi2 / (e.z * e.z) * e.a_plus)
        .chain(sp.entries.iter().map(|e| -e.a_plus.conj()))
        .collect();
    Ok(ExpandedSpectrum { pole_order: PoleOrder::Simple, xi, xi_hat, a_minus_hat, b_minus_hat: None })
}

pub fn expand_double(sp: &DoubleSpectrum, p: &ModelParams) -> Result<ExpandedSpectrum, ValidationError> {
    let spec = Spectrum::Double(sp.clone());
    let errs = spec.validate(p);
    if !errs.is_empty() {
        return Err(ValidationError(errs));
    }
    let zs = spec.eigenvalues();
    let (xi, xi_hat) = expand_points(&zs, p);
    let psi = p.psi_minus();
    let s = p.psi0() * p.psi0();
    let a_minus_hat = sp
        .entries
        .iter()
        .map(|e| s * s * psi / (e.z.powi(4) * psi.conj()) * e.a_plus)
        .chain(sp.entries.iter().map(|e| -e.a_plus.conj()))
        .collect();
    let b_minus_hat = sp
        .entries
        .iter()
        .map(|e| e.z * e.z / s * (e.b_plus - 2.0 / e.z))
        .chain(sp.entries.iter().map(|e| e.b_plus.conj()))
        .collect();
    Ok(ExpandedSpectrum {
        pole_order: PoleOrder::Double,
        xi,
        xi_hat,
        a_minus_hat,
        b_minus_hat: Some(b_minus_hat),
    })
}

/// Recovers `A+[z_n]` from `A−[ξ̂_n]` (inverse of the expansion symmetry).
pub fn a_plus_from_minus(z: Complex64, a_minus_hat: Complex64, order: PoleOrder, p: &ModelParams) -> Complex64 {
    let psi = p.psi_minus();
    let s = p.psi0() * p.psi0();
    match order {
        PoleOrder::Simple => z * z / (psi * psi) * a_minus_hat,
        PoleOrder::Double => z.powi(4) * psi.conj() / (s * s * psi) * a_minus_hat,
    }
}

/// Reduces to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = reduce_angle(a - b);
    d.min(TAU - d)
}

/// Human-readable theta condition: `0` for an empty spectrum, `2π` for a
/// nonzero multiple of `2π`, `π` for odd multiples of `π`, decimals otherwise.
pub fn format_theta(s: &Spectrum) -> String {
    const TOL: f64 = 1e-9;
    let raw = s.theta_condition_raw();
    let r = s.theta_condition();
    if s.is_empty() {
        "0".to_string()
    } else if angle_distance(r, 0.0) < TOL {
        if raw.abs() < TOL {
            "0".to_string()
        } else {
            "2π".to_string()
        }
    } else if angle_distance(r, PI) < TOL {
        "π".to_string()
    } else {
        format!("{r:.12}")
    }
}
