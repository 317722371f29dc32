//! Boundary Lax matrices at the constant background and the time-flow
//! eigenvalue they imply.
//!
//! At `x → -∞` every derivative of the potential vanishes and
//! `Q² = -ψ0² I`, so the spatial matrix is `U = ik σ3 + Q-` with eigenvalues
//! `±iλ`. Any correct time matrix must commute with `U`; its eigenvalue on
//! the `+iλ` eigenvector divided by `iλ` is the dispersion `Ω`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;
use crate::spectral::{self, SpectralPoint};

/// `|λ|` below this is treated as a branch point.
pub const BRANCH_EPS: f64 = 1e-8;
/// Relative tolerance for `‖[U,V]‖max <= tol · ‖U‖max ‖V‖max`.
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Aggregate verdict threshold on `|Ω_printed - Ω_lax|`.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaxError {
    #[error("z = {0} is a branch point (|λ| < {BRANCH_EPS:e})")]
    BranchPoint(Complex64),
    #[error("[U, V] does not vanish at z = {z} (relative size {relative:e})")]
    NonCommuting { z: Complex64, relative: f64 },
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const SIGMA3: Mat2 = Mat2([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn scale(self, s: Complex64) -> Self {
        let m = self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(self, other: Mat2) -> Mat2 {
        self * other - other * self
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Both eigenvalues, ordered by imaginary part (ascending).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let (a, b) = (half_tr - disc, half_tr + disc);
        if a.im <= b.im {
            [a, b]
        } else {
            [b, a]
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Mul<Mat2> for Complex64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m.scale(self)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m.scale(Complex64::new(self, 0.0))
    }
}

/// How the time matrix is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaxForm {
    /// Term by term from the printed `Δ_NLS, Δ_MKdV, Δ_LPD, Δ_FOQ` and `3iα4σ3`.
    #[default]
    Printed,
    /// `V = Ω_hierarchy(k) · U`, the background limit of the AKNS flows.
    Hierarchy,
}

/// `U` and `V` at the minus-side background for one spectral point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLaxPair {
    pub u: Mat2,
    pub v: Mat2,
    pub z: SpectralPoint,
}

fn q_minus(p: &ModelParams) -> Mat2 {
    let psi = p.psi_minus();
    Mat2::new(ZERO, psi, -psi.conj(), ZERO)
}

/// `U- = ik σ3 + Q-`.
pub fn build_u_boundary(z: SpectralPoint, p: &ModelParams) -> Mat2 {
    let k = spectral::k_of_z(z, p);
    (I * k) * Mat2::SIGMA3 + q_minus(p)
}

/// The four printed building blocks evaluated at the background, before
/// multiplying by `α2..α5`.
#[derive(Debug, Clone, Copy)]
pub struct PrintedBlocks {
    pub nls: Mat2,
    pub mkdv: Mat2,
    pub lpd: Mat2,
    pub foq: Mat2,
    /// The separate `3iσ3` that multiplies `α4`.
    pub lpd_shift: Mat2,
}

pub fn printed_blocks(z: SpectralPoint, p: &ModelParams) -> PrintedBlocks {
    let k = spectral::k_of_z(z, p);
    let psi = p.psi_minus();
    let s = p.psi0() * p.psi0();
    let sigma3 = Mat2::SIGMA3;
    let u = build_u_boundary(z, p);
    let q = q_minus(p);
    // every x-derivative of the potential vanishes at the background
    let qx = Mat2::ZERO;
    let qxx = Mat2::ZERO;
    let q2 = q * q;
    let q3 = q2 * q;

    let nls = (-2.0 * k) * u + I * (sigma3 * (qx - q2 - (s * Mat2::IDENTITY)));
    let mkdv = (-2.0 * k) * (nls + (I * s) * sigma3) - q.commutator(qx) - qxx + 2.0 * q3;

    let v0 = Mat2::new(-0.5 * I * s, ZERO, ZERO, 0.5 * I * s);
    let l0 = Mat2::new(ZERO, I * (2.0 * s * psi), I * (2.0 * s * psi.conj()), ZERO);
    let m1 = -I * (3.0 * s * s);
    let m2 = ZERO;
    let m0 = Mat2::new(m1, -m2.conj(), m2, -m1);
    let four_i_k3 = (4.0 * I * k * k * k) * Mat2::IDENTITY;
    let lpd = (2.0 * k) * (-(four_i_k3 + (k * k) * q + k * v0) + l0) + m0;

    let n1 = ZERO;
    let n2 = I * (6.0 * s * s * psi.conj());
    let n0 = Mat2::new(n1, -n2.conj(), n2, -n1);
    let foq = (-2.0 * k) * lpd + n0;

    PrintedBlocks { nls, mkdv, lpd, foq, lpd_shift: (3.0 * I) * sigma3 }
}

pub fn build_v_boundary_form(z: SpectralPoint, p: &ModelParams, form: LaxForm) -> Mat2 {
    match form {
        LaxForm::Printed => {
            let b = printed_blocks(z, p);
            p.alpha2 * b.nls + p.alpha3 * b.mkdv + p.alpha4 * b.lpd + p.alpha5 * b.foq + p.alpha4 * b.lpd_shift
        }
        LaxForm::Hierarchy => {
            let omega = spectral::omega_hierarchy_k(spectral::k_of_z(z, p), p);
            omega * build_u_boundary(z, p)
        }
    }
}

/// `V-` assembled from the printed blocks.
pub fn build_v_boundary(z: SpectralPoint, p: &ModelParams) -> Mat2 {
    build_v_boundary_form(z, p, LaxForm::Printed)
}

pub fn boundary_pair(z: SpectralPoint, p: &ModelParams, form: LaxForm) -> BoundaryLaxPair {
    BoundaryLaxPair { u: build_u_boundary(z, p), v: build_v_boundary_form(z, p, form), z }
}

impl BoundaryLaxPair {
    /// `‖[U,V]‖max / (‖U‖max ‖V‖max)`, zero when `V` vanishes.
    pub fn relative_commutator(&self) -> f64 {
        let scale = self.u.max_abs() * self.v.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.u.commutator(self.v).max_abs() / scale
        }
    }

    /// Rayleigh quotient of `V` on the `+iλ` eigenvector of `U`, divided by
    /// `iλ`. Meaningful only when the pair commutes.
    pub fn rayleigh_omega(&self, p: &ModelParams) -> Result<Complex64, LaxError> {
        let lambda = spectral::lambda_of_z(self.z, p);
        if lambda.norm() < BRANCH_EPS {
            return Err(LaxError::BranchPoint(self.z.z()));
        }
        // U (1, iψ-*/z)ᵀ = iλ (1, iψ-*/z)ᵀ
        let e = [ONE, I * p.psi_minus().conj() / self.z.z()];
        let ve = self.v.apply(e);
        let num = e[0].conj() * ve[0] + e[1].conj() * ve[1];
        let den = e[0].norm_sqr() + e[1].norm_sqr();
        Ok(num / den / (I * lambda))
    }
}

/// `Ω` extracted from an assembled pair; errors at branch points and when
/// the pair fails to commute.
pub fn omega_from_lax_form(z: SpectralPoint, p: &ModelParams, form: LaxForm) -> Result<Complex64, LaxError> {
    let pair = boundary_pair(z, p, form);
    let omega = pair.rayleigh_omega(p)?;
    let relative = pair.relative_commutator();
    if relative > COMMUTATOR_TOL {
        return Err(LaxError::NonCommuting { z: z.z(), relative });
    }
    Ok(omega)
}

/// `Ω` from the printed assembly.
pub fn omega_from_lax(z: SpectralPoint, p: &ModelParams) -> Result<Complex64, LaxError> {
    omega_from_lax_form(z, p, LaxForm::Printed)
}

/// One `α_n`-isolated comparison inside a [`DispersionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    /// Index `n` of `α_n`.
    pub term: usize,
    pub omega_printed: Complex64,
    /// Rayleigh-quotient value, reported even when the pair does not commute.
    pub omega_rayleigh: Option<Complex64>,
    pub commutator: f64,
    pub commutes: bool,
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub z: Complex64,
    pub omega_printed: Complex64,
    pub omega_lax: Option<Complex64>,
    pub abs_discrepancy: Option<f64>,
    pub commutator: f64,
    pub per_term: Vec<TermReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PrintedConsistent,
    PrintedInconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub verdict: Verdict,
    pub max_discrepancy: Option<f64>,
    pub max_commutator: f64,
    pub reports: Vec<DispersionReport>,
}

fn term_report(z: SpectralPoint, p: &ModelParams, n: usize) -> TermReport {
    let mut alphas = [0.0; 4];
    alphas[n - 2] = 1.0;
    let single = p.with_alphas(alphas);
    let pair = boundary_pair(z, &single, LaxForm::Printed);
    let omega_printed = spectral::omega_printed_k(spectral::k_of_z(z, &single), &single);
    let omega_rayleigh = pair.rayleigh_omega(&single).ok();
    let commutator = pair.relative_commutator();
    let commutes = commutator <= COMMUTATOR_TOL;
    TermReport {
        term: n,
        omega_printed,
        omega_rayleigh,
        commutator,
        commutes,
        discrepancy: omega_rayleigh.filter(|_| commutes).map(|w| (w - omega_printed).norm()),
    }
}

pub fn dispersion_report(z: SpectralPoint, p: &ModelParams) -> DispersionReport {
    let omega_printed = spectral::omega_printed_k(spectral::k_of_z(z, p), p);
    let pair = boundary_pair(z, p, LaxForm::Printed);
    let commutator = pair.relative_commutator();
    let lax = omega_from_lax(z, p);
    let per_term = (2..=5)
        .filter(|n| p.alphas()[n - 2] != 0.0)
        .map(|n| term_report(z, p, n))
        .collect();
    let (omega_lax, error) = match lax {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    DispersionReport {
        z: z.z(),
        omega_printed,
        omega_lax,
        abs_discrepancy: omega_lax.map(|w| (w - omega_printed).norm()),
        commutator,
        per_term,
        error,
    }
}

/// Compares the printed dispersion with the Lax-extracted one at every
/// sample point. Per-point failures become report entries; the batch never
/// aborts. Report order matches input order.
pub fn calibrate(p: &ModelParams, sample_points: &[SpectralPoint]) -> Calibration {
    use rayon::prelude::*;
    let reports: Vec<DispersionReport> =
        sample_points.par_iter().map(|z| dispersion_report(*z, p)).collect();
    let all_ok = reports.iter().all(|r| r.error.is_none());
    let max_discrepancy = if all_ok {
        reports.iter().filter_map(|r| r.abs_discrepancy).reduce(f64::max)
    } else {
        None
    };
    let max_commutator = reports.iter().map(|r| r.commutator).fold(0.0, f64::max);
    let verdict = match max_discrepancy {
        Some(d) if d < CONSISTENCY_TOL => Verdict::PrintedConsistent,
        None if all_ok => Verdict::PrintedConsistent,
        _ => Verdict::PrintedInconsistent,
    };
    Calibration { verdict, max_discrepancy, max_commutator, reports }
}
