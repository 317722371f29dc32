//! Reflectionless reconstruction: assemble the `2N` (simple) or `4N`
//! (double) linear system at a space-time point, solve it, and rebuild `ψ`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CMatrix, LinalgError, Lu};
use crate::params::ModelParams;
use crate::spectral::{DispersionMode, PhaseData, SpectralError, SpectralPoint};
use crate::spectrum::{ExpandedSpectrum, PoleOrder};

/// Largest `|Re(2iθ)|` fed to the exponential.
pub const EXPONENT_CLAMP: f64 = 700.0;
/// Points whose condition estimate reaches this are flagged.
pub const CONDITION_LIMIT: f64 = 1e14;
/// Size guard for the literal determinant path.
pub const DET_PATH_MAX: usize = 12;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("determinant path limited to 2N <= {DET_PATH_MAX} (got {0})")]
    TooLarge(usize),
    #[error("expanded spectrum has pole order {found}, operation needs {expected}")]
    WrongOrder { expected: PoleOrder, found: PoleOrder },
    #[error("double-pole spectrum is missing B data")]
    MissingB,
    #[error("grid needs nx, nt >= 1")]
    EmptyGrid,
}

/// Sign `σ` in `ψ = ψ− + σ wᵀy` with `G y = v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `σ = −i`; equivalent to `ψ− + i det(G v; wᵀ 0)/det G`.
    #[default]
    MinusI,
    PlusI,
}

impl SignConvention {
    pub fn sigma(self) -> Complex64 {
        match self {
            SignConvention::MinusI => -I,
            SignConvention::PlusI => I,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            SignConvention::MinusI => SignConvention::PlusI,
            SignConvention::PlusI => SignConvention::MinusI,
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::MinusI => "minus_i",
            SignConvention::PlusI => "plus_i",
        })
    }
}

/// Per-point quality flags.
pub mod flags {
    pub const CLAMPED: u8 = 1;
    pub const ILL_CONDITIONED: u8 = 2;
    pub const SINGULAR: u8 = 4;
    pub const NON_FINITE: u8 = 8;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub psi: Complex64,
    pub condition: f64,
    pub flags: u8,
}

impl PointValue {
    pub fn is_flagged(&self) -> bool {
        self.flags != 0
    }
}

#[derive(Debug, Clone)]
pub struct PointSystemSimple {
    pub g: CMatrix,
    pub w: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub condition_estimate: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct PointSystemDouble {
    pub h: CMatrix,
    /// `A−[ξ̂_n] e^{2iθ(ξ̂_n)}`.
    pub c: Vec<Complex64>,
    /// `B−[ξ̂_n] + 2iθ'(ξ̂_n)`.
    pub d_hat: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    pub condition_estimate: f64,
    pub clamped: bool,
}

/// Expanded spectrum plus everything that does not depend on `(x, t)`.
#[derive(Debug, Clone)]
pub struct Engine {
    params: ModelParams,
    spectrum: ExpandedSpectrum,
    phases: Vec<PhaseData>,
    dispersion: DispersionMode,
    sign: SignConvention,
}

/// Divides every column by its largest entry. Partial-pivoting LU is
/// invariant under column scaling, so this only removes the `e^{2iθ}`
/// magnitude spread from the condition estimate and guards against overflow.
fn row_scales(a: &CMatrix) -> Vec<f64> {
    let n = a.dim();
    (0..n)
        .map(|i| {
            let m = (0..n).map(|j| a.get(i, j).norm()).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                1.0 / m
            } else {
                1.0
            }
        })
        .collect()
}

/// Scales rows, then columns, to unit max-norm. Returns `(row, column)` factors.
fn equilibrate(a: &mut CMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let r = row_scales(a);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, a.get(i, j) * r[i]);
        }
    }
    let c: Vec<f64> = (0..n)
        .map(|j| {
            let m = (0..n).map(|i| a.get(i, j).norm()).fold(0.0, f64::max);
            let d = if m > 0.0 && m.is_finite() { 1.0 / m } else { 1.0 };
            for i in 0..n {
                a.set(i, j, a.get(i, j) * d);
            }
            d
        })
        .collect();
    (r, c)
}

fn equilibrated_condition(a: &CMatrix) -> f64 {
    let mut scaled = a.clone();
    equilibrate(&mut scaled);
    match Lu::factor(&scaled) {
        Ok(lu) => lu.condition_estimate(),
        Err(_) => f64::INFINITY,
    }
}

/// Solves `a y = b` through `(R a C) z = R b`, `y = C z`.
fn solve_equilibrated(a: &CMatrix, b: &[Complex64]) -> Result<(Vec<Complex64>, f64), LinalgError> {
    let mut scaled = a.clone();
    let (r, c) = equilibrate(&mut scaled);
    let lu = Lu::factor(&scaled)?;
    let rb: Vec<Complex64> = b.iter().zip(&r).map(|(b, r)| b * r).collect();
    let z = lu.solve(&rb)?;
    let cond = lu.condition_estimate();
    Ok((z.iter().zip(&c).map(|(z, c)| z * c).collect(), cond))
}

impl Engine {
    pub fn new(
        spectrum: ExpandedSpectrum,
        params: ModelParams,
        dispersion: DispersionMode,
        sign: SignConvention,
    ) -> Result<Self, EngineError> {
        if spectrum.pole_order == PoleOrder::Double && spectrum.b_minus_hat.is_none() {
            return Err(EngineError::MissingB);
        }
        let phases = spectrum
            .xi_hat
            .iter()
            .map(|&z| PhaseData::new(SpectralPoint::new(z)?, &params, dispersion))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { params, spectrum, phases, dispersion, sign })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spectrum(&self) -> &ExpandedSpectrum {
        &self.spectrum
    }

    pub fn dispersion(&self) -> DispersionMode {
        self.dispersion
    }

    pub fn sign(&self) -> SignConvention {
        self.sign
    }

    pub fn with_sign(&self, sign: SignConvention) -> Self {
        Self { sign, ..self.clone() }
    }

    pub fn pole_order(&self) -> PoleOrder {
        self.spectrum.pole_order
    }

    /// `A−[ξ̂_j] e^{2iθ(x,t,ξ̂_j)}` with the real part of the exponent clamped.
    fn weights(&self, x: f64, t: f64) -> (Vec<Complex64>, bool) {
        let mut clamped = false;
        let w = self
            .phases
            .iter()
            .zip(&self.spectrum.a_minus_hat)
            .map(|(ph, a)| {
                let mut e = 2.0 * I * ph.theta(x, t);
                if e.re.abs() > EXPONENT_CLAMP {
                    e.re = EXPONENT_CLAMP.copysign(e.re);
                    clamped = true;
                }
                a * e.exp()
            })
            .collect();
        (w, clamped)
    }

    fn v_vector(&self) -> Vec<Complex64> {
        let psi = self.params.psi_minus();
        self.spectrum.xi.iter().map(|xi| -I * psi / xi).collect()
    }

    fn require(&self, order: PoleOrder) -> Result<(), EngineError> {
        if self.spectrum.pole_order != order {
            return Err(EngineError::WrongOrder { expected: order, found: self.spectrum.pole_order });
        }
        Ok(())
    }

    pub fn assemble_simple(&self, x: f64, t: f64) -> Result<PointSystemSimple, EngineError> {
        self.require(PoleOrder::Simple)?;
        let (w, clamped) = self.weights(x, t);
        let v = self.v_vector();
        let xi = &self.spectrum.xi;
        let xh = &self.spectrum.xi_hat;
        let g = CMatrix::from_fn(xi.len(), |s, j| {
            let diag = if s == j { v[s] } else { ZERO };
            w[j] / (xi[s] - xh[j]) + diag
        });
        let condition_estimate = equilibrated_condition(&g);
        Ok(PointSystemSimple { g, w, v, condition_estimate, clamped })
    }

    pub fn psi_simple_point(&self, x: f64, t: f64) -> Result<PointValue, EngineError> {
        self.require(PoleOrder::Simple)?;
        let psi_minus = self.params.psi_minus();
        if self.spectrum.xi.is_empty() {
            return Ok(PointValue { psi: psi_minus, condition: 1.0, flags: 0 });
        }
        let sys = self.assemble_simple(x, t)?;
        let mut fl = if sys.clamped { flags::CLAMPED } else { 0 };
        let (psi, condition) = match solve_equilibrated(&sys.g, &sys.v) {
            Ok((y, cond)) => {
                let wy: Complex64 = sys.w.iter().zip(&y).map(|(w, y)| w * y).sum();
                (psi_minus + self.sign.sigma() * wy, cond)
            }
            Err(_) => {
                fl |= flags::SINGULAR;
                (Complex64::new(f64::NAN, f64::NAN), f64::INFINITY)
            }
        };
        Ok(PointValue { psi, condition, flags: fl | quality_flags(psi, condition) })
    }

    /// `ψ− + i det(G v; wᵀ 0) / det G`, evaluated literally.
    pub fn psi_simple_det_point(&self, x: f64, t: f64) -> Result<Complex64, EngineError> {
        self.require(PoleOrder::Simple)?;
        let m = self.spectrum.xi.len();
        if m > DET_PATH_MAX {
            return Err(EngineError::TooLarge(m));
        }
        let psi_minus = self.params.psi_minus();
        if m == 0 {
            return Ok(psi_minus);
        }
        let sys = self.assemble_simple(x, t)?;
        let bordered = CMatrix::from_fn(m + 1, |r, c| match (r < m, c < m) {
            (true, true) => sys.g.get(r, c),
            (true, false) => sys.v[r],
            (false, true) => sys.w[c],
            (false, false) => ZERO,
        });
        let det_g = Lu::factor(&sys.g)?.det();
        let det_b = match Lu::factor(&bordered) {
            Ok(lu) => lu.det(),
            Err(LinalgError::Singular(_)) => ZERO,
            Err(e) => return Err(e.into()),
        };
        Ok(psi_minus + I * det_b / det_g)
    }

    pub fn assemble_double(&self, x: f64, t: f64) -> Result<PointSystemDouble, EngineError> {
        self.require(PoleOrder::Double)?;
        let b_minus = self.spectrum.b_minus_hat.as_ref().ok_or(EngineError::MissingB)?;
        let (c, clamped) = self.weights(x, t);
        let d_hat: Vec<Complex64> =
            self.phases.iter().zip(b_minus).map(|(ph, b)| b + 2.0 * I * ph.theta_prime(x, t)).collect();
        let psi = self.params.psi_minus();
        let s0 = self.params.psi0() * self.params.psi0();
        let xi = &self.spectrum.xi;
        let xh = &self.spectrum.xi_hat;
        let m = xi.len();
        let h = CMatrix::from_fn(2 * m, |r, col| {
            let (s, n) = (r % m, col % m);
            let dd = xi[s] - xh[n];
            let cc = c[n] / dd;
            let delta = s == n;
            match (r < m, col < m) {
                (true, true) => cc,
                (true, false) => cc * (d_hat[n] + 1.0 / dd) - if delta { I * psi / xi[s] } else { ZERO },
                (false, true) => cc / dd + if delta { I * s0 * psi / xi[s].powi(3) } else { ZERO },
                (false, false) => {
                    cc / dd * (d_hat[n] + 2.0 / dd) - if delta { I * psi / (xi[s] * xi[s]) } else { ZERO }
                }
            }
        });
        let rhs = xi
            .iter()
            .map(|x| -I * psi / x)
            .chain(xi.iter().map(|x| -I * psi / (x * x)))
            .collect();
        let condition_estimate = equilibrated_condition(&h);
        Ok(PointSystemDouble { h, c, d_hat, rhs, condition_estimate, clamped })
    }

    pub fn psi_double_point(&self, x: f64, t: f64) -> Result<PointValue, EngineError> {
        self.require(PoleOrder::Double)?;
        let psi_minus = self.params.psi_minus();
        if self.spectrum.xi.is_empty() {
            return Ok(PointValue { psi: psi_minus, condition: 1.0, flags: 0 });
        }
        let sys = self.assemble_double(x, t)?;
        let m = sys.c.len();
        let mut fl = if sys.clamped { flags::CLAMPED } else { 0 };
        let (psi, condition) = match solve_equilibrated(&sys.h, &sys.rhs) {
            Ok((u, cond)) => {
                let sum: Complex64 = (0..m).map(|n| sys.c[n] * (u[n] + sys.d_hat[n] * u[m + n])).sum();
                (psi_minus + self.sign.sigma() * sum, cond)
            }
            Err(_) => {
                fl |= flags::SINGULAR;
                (Complex64::new(f64::NAN, f64::NAN), f64::INFINITY)
            }
        };
        Ok(PointValue { psi, condition, flags: fl | quality_flags(psi, condition) })
    }

    /// Evaluates the engine matching the spectrum's pole order.
    pub fn point(&self, x: f64, t: f64) -> PointValue {
        let r = match self.spectrum.pole_order {
            PoleOrder::Simple => self.psi_simple_point(x, t),
            PoleOrder::Double => self.psi_double_point(x, t),
        };
        // the order always matches here, so only numerical failure remains
        r.unwrap_or(PointValue {
            psi: Complex64::new(f64::NAN, f64::NAN),
            condition: f64::INFINITY,
            flags: flags::SINGULAR | flags::NON_FINITE,
        })
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.point(x, t).psi
    }
}

fn quality_flags(psi: Complex64, condition: f64) -> u8 {
    let mut f = 0;
    if !(condition < CONDITION_LIMIT) {
        f |= flags::ILL_CONDITIONED;
    }
    if !(psi.re.is_finite() && psi.im.is_finite()) {
        f |= flags::NON_FINITE;
    }
    f
}

/// Uniform rectangular grid; `nx == 1` (or `nt == 1`) uses only the start value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl Grid {
    pub fn new(x: (f64, f64, usize), t: (f64, f64, usize)) -> Self {
        Self { x0: x.0, x1: x.1, nx: x.2, t0: t.0, t1: t.1, nt: t.2 }
    }

    /// Grid with spacing `hx`, `ht` starting at `x0`, `t0`.
    pub fn with_spacing(x0: f64, hx: f64, nx: usize, t0: f64, ht: f64, nt: usize) -> Self {
        Self {
            x0,
            x1: x0 + hx * (nx.max(1) - 1) as f64,
            nx,
            t0,
            t1: t0 + ht * (nt.max(1) - 1) as f64,
            nt,
        }
    }

    pub fn hx(&self) -> f64 {
        if self.nx > 1 {
            (self.x1 - self.x0) / (self.nx - 1) as f64
        } else {
            0.0
        }
    }

    pub fn ht(&self) -> f64 {
        if self.nt > 1 {
            (self.t1 - self.t0) / (self.nt - 1) as f64
        } else {
            0.0
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.ht()
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub config_digest: String,
    pub pole_order: PoleOrder,
    pub sign_convention: SignConvention,
    pub dispersion_mode: DispersionMode,
    /// Background rotation rate `6 α4 ψ0⁴` removed by the gauge-fixed K4.
    pub gamma: f64,
    pub max_condition_estimate: f64,
    pub flagged_points: usize,
    pub clamped_points: usize,
    pub ill_conditioned_points: usize,
    pub library_version: String,
}

/// `ψ` sampled on a grid, stored `t`-outer, `x`-inner.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub flags: Vec<u8>,
    pub meta: FieldMeta,
}

impl SolutionField {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.grid.nx + i]
    }

    /// Builds a field from explicit values (all points unflagged).
    pub fn from_values(grid: Grid, values: Vec<Complex64>, meta: FieldMeta) -> Self {
        let flags = vec![0; values.len()];
        Self { grid, values, flags, meta }
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.grid.nx..(j + 1) * self.grid.nx]
    }
}

impl FieldMeta {
    pub fn for_engine(engine: &Engine, config_digest: impl Into<String>) -> Self {
        let p = engine.params();
        Self {
            config_digest: config_digest.into(),
            pole_order: engine.pole_order(),
            sign_convention: engine.sign(),
            dispersion_mode: engine.dispersion(),
            gamma: 6.0 * p.alpha4 * p.psi0().powi(4),
            max_condition_estimate: 1.0,
            flagged_points: 0,
            clamped_points: 0,
            ill_conditioned_points: 0,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Evaluates every grid node. Each node is computed independently, so the
/// output does not depend on how rayon splits the work.
pub fn evaluate_grid(engine: &Engine, grid: &Grid, config_digest: &str) -> Result<SolutionField, EngineError> {
    if grid.nx == 0 || grid.nt == 0 {
        return Err(EngineError::EmptyGrid);
    }
    let points: Vec<PointValue> = (0..grid.len())
        .into_par_iter()
        .map(|idx| engine.point(grid.x(idx % grid.nx), grid.t(idx / grid.nx)))
        .collect();
    let mut meta = FieldMeta::for_engine(engine, config_digest);
    meta.max_condition_estimate = points.iter().map(|p| p.condition).fold(1.0, f64::max);
    meta.flagged_points = points.iter().filter(|p| p.is_flagged()).count();
    meta.clamped_points = points.iter().filter(|p| p.flags & flags::CLAMPED != 0).count();
    meta.ill_conditioned_points = points.iter().filter(|p| p.flags & flags::ILL_CONDITIONED != 0).count();
    Ok(SolutionField {
        grid: *grid,
        values: points.iter().map(|p| p.psi).collect(),
        flags: points.iter().map(|p| p.flags).collect(),
        meta,
    })
}
