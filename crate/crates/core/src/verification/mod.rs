//! Independent checks on engine output: finite-difference residual of the
//! equation, boundary and phase diagnostics, a short-time integrator and a
//! sech fit for the zero-background limit.

pub mod fit;
pub mod integrator;
pub mod stencil;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SolutionField;
use crate::params::ModelParams;
use crate::spectrum::reduce_angle;
use stencil::{central_half_width, derivative_2d, Axis};

pub use fit::{fit_sech, SechFit};
pub use integrator::{integrate_short_time, stable_dt, IntegratorOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("grid too small: {points} points along an axis, need at least {needed}")]
    GridTooSmall { points: usize, needed: usize },
    #[error("derivative order {0} not supported (1..=5)")]
    UnsupportedOrder(usize),
    #[error("reports come from different configurations ({0} vs {1})")]
    DigestMismatch(String, String),
    #[error("integration blew up at step {step}: sup-norm {norm:e} exceeds 10× the initial {initial:e}")]
    Unstable { step: usize, norm: f64, initial: f64 },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
}

/// Treatment of the `6|ψ|⁴ψ` term of `K4` on the constant background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMode {
    /// `K4 → K4 − 6ψ0⁴ψ`, so `ψ ≡ ψ−` is stationary.
    #[default]
    GaugeFixed,
    Verbatim,
}

impl fmt::Display for GaugeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeMode::GaugeFixed => "gauge_fixed",
            GaugeMode::Verbatim => "verbatim",
        })
    }
}

/// Which quartic operator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K4Form {
    /// `ψxxxx + 8|ψ|²ψxx + 6|ψ|⁴ψ + 6ψ*ψx² + 2ψ²ψ*xx`.
    #[default]
    Printed,
    /// The printed form plus `4|ψx|²ψ` (the Lakshmanan–Porsezian–Daniel flow).
    Integrable,
}

impl fmt::Display for K4Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            K4Form::Printed => "printed",
            K4Form::Integrable => "integrable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KOperator {
    K2,
    K3,
    K4,
    K5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResidualOptions {
    pub gauge: GaugeMode,
    pub k4: K4Form,
}

/// `x`-derivatives 0..=5 of a `t`-outer array.
struct XDerivatives {
    d: [Vec<Complex64>; 6],
}

impl XDerivatives {
    fn new(values: &[Complex64], nx: usize, nt: usize, hx: f64, max_order: usize) -> Result<Self, VerifyError> {
        let mut d: [Vec<Complex64>; 6] = Default::default();
        d[0] = values.to_vec();
        for (m, slot) in d.iter_mut().enumerate().skip(1) {
            if m <= max_order {
                *slot = derivative_2d(values, nx, nt, hx, Axis::X, m)?;
            }
        }
        Ok(Self { d })
    }
}

fn k_at(which: KOperator, d: &XDerivatives, idx: usize, p: &ModelParams, opts: ResidualOptions) -> Complex64 {
    let g = |m: usize| d.d[m][idx];
    let psi = g(0);
    let m2 = psi.norm_sqr();
    let s = p.psi0() * p.psi0();
    match which {
        KOperator::K2 => g(2) + 2.0 * (m2 - s) * psi,
        KOperator::K3 => g(3) + 6.0 * m2 * g(1),
        KOperator::K4 => {
            let (px, pxx) = (g(1), g(2));
            let mut k = g(4) + 8.0 * m2 * pxx + 6.0 * m2 * m2 * psi + 6.0 * psi.conj() * px * px
                + 2.0 * psi * psi * pxx.conj();
            if opts.k4 == K4Form::Integrable {
                k += 4.0 * px.norm_sqr() * psi;
            }
            if opts.gauge == GaugeMode::GaugeFixed {
                k -= 6.0 * s * s * psi;
            }
            k
        }
        KOperator::K5 => {
            let (px, pxx, pxxx) = (g(1), g(2), g(3));
            // (ψ|ψx|²)x by the product rule
            let q_x = px * px.norm_sqr() + psi * (pxx * px.conj() + px * pxx.conj());
            g(5) + 10.0 * m2 * pxxx + 10.0 * q_x + 20.0 * psi.conj() * px * pxx + 30.0 * m2 * m2 * px
        }
    }
}

fn max_order(which: KOperator) -> usize {
    match which {
        KOperator::K2 => 2,
        KOperator::K3 => 3,
        KOperator::K4 => 4,
        KOperator::K5 => 5,
    }
}

/// `K2..K5` of a `t`-outer array of shape `(nt, nx)`.
pub fn apply_k_values(
    values: &[Complex64],
    nx: usize,
    nt: usize,
    hx: f64,
    p: &ModelParams,
    which: KOperator,
    opts: ResidualOptions,
) -> Result<Vec<Complex64>, VerifyError> {
    let d = XDerivatives::new(values, nx, nt, hx, max_order(which))?;
    Ok((0..values.len()).map(|idx| k_at(which, &d, idx, p, opts)).collect())
}

pub fn apply_k(
    field: &SolutionField,
    p: &ModelParams,
    which: KOperator,
    opts: ResidualOptions,
) -> Result<Vec<Complex64>, VerifyError> {
    let g = &field.grid;
    apply_k_values(&field.values, g.nx, g.nt, g.hx(), p, which, opts)
}

/// Right-hand side `ψt = i(α2K2 − iα3K3 + α4K4 − iα5K5)` for a single row.
pub fn time_derivative_row(
    row: &[Complex64],
    hx: f64,
    p: &ModelParams,
    opts: ResidualOptions,
) -> Result<Vec<Complex64>, VerifyError> {
    let i = Complex64::new(0.0, 1.0);
    let order = if p.alpha5 != 0.0 {
        5
    } else if p.alpha4 != 0.0 {
        4
    } else if p.alpha3 != 0.0 {
        3
    } else {
        2
    };
    let d = XDerivatives::new(row, row.len(), 1, hx, order)?;
    Ok((0..row.len())
        .map(|idx| {
            let mut f = p.alpha2 * k_at(KOperator::K2, &d, idx, p, opts);
            if p.alpha3 != 0.0 {
                f -= i * p.alpha3 * k_at(KOperator::K3, &d, idx, p, opts);
            }
            if p.alpha4 != 0.0 {
                f += p.alpha4 * k_at(KOperator::K4, &d, idx, p, opts);
            }
            if p.alpha5 != 0.0 {
                f -= i * p.alpha5 * k_at(KOperator::K5, &d, idx, p, opts);
            }
            i * f
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermNorms {
    pub time_derivative: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// Sup-norms of `iψt`, `α2K2`, `α3K3`, `α4K4`, `α5K5` over the interior.
    pub per_term_norms: TermNorms,
    pub hx: f64,
    pub ht: f64,
    pub gauge_mode: GaugeMode,
    pub k4_form: K4Form,
    pub gamma: f64,
    pub convergence_order: Option<f64>,
    /// Grid points dropped at each `x` and `t` edge.
    pub trim_x: usize,
    pub trim_t: usize,
    pub config_digest: String,
}

impl ResidualReport {
    /// Attaches the empirical order `log(sup_coarse/sup_fine)/log(hx_coarse/hx_fine)`
    /// to the finer report.
    pub fn refine(coarse: &ResidualReport, fine: &ResidualReport) -> Result<ResidualReport, VerifyError> {
        if coarse.config_digest != fine.config_digest {
            return Err(VerifyError::DigestMismatch(coarse.config_digest.clone(), fine.config_digest.clone()));
        }
        let mut out = fine.clone();
        out.convergence_order = Some((coarse.sup_norm / fine.sup_norm).ln() / (coarse.hx / fine.hx).ln());
        Ok(out)
    }

    pub fn reduction_factor(coarse: &ResidualReport, fine: &ResidualReport) -> Result<f64, VerifyError> {
        if coarse.config_digest != fine.config_digest {
            return Err(VerifyError::DigestMismatch(coarse.config_digest.clone(), fine.config_digest.clone()));
        }
        Ok(coarse.sup_norm / fine.sup_norm)
    }
}

/// Residual of `iψt + α2K2 − iα3K3 + α4K4 − iα5K5` on the stencil-trimmed
/// interior.
pub fn residual(field: &SolutionField, p: &ModelParams, opts: ResidualOptions) -> Result<ResidualReport, VerifyError> {
    let g = &field.grid;
    let (nx, nt) = (g.nx, g.nt);
    let (hx, ht) = (g.hx(), g.ht());
    let i = Complex64::new(0.0, 1.0);
    let trim_x = central_half_width(5);
    let trim_t = central_half_width(1);
    if nx < 2 * trim_x + 1 || nx < 9 {
        return Err(VerifyError::GridTooSmall { points: nx, needed: (2 * trim_x + 1).max(9) });
    }
    if nt < 2 * trim_t + 1 || nt < 5 {
        return Err(VerifyError::GridTooSmall { points: nt, needed: (2 * trim_t + 1).max(5) });
    }
    let psi_t = derivative_2d(&field.values, nx, nt, ht, Axis::T, 1)?;
    let d = XDerivatives::new(&field.values, nx, nt, hx, 5)?;
    let mut sup = 0.0f64;
    let mut l2 = 0.0f64;
    let mut terms = [0.0f64; 5];
    for j in trim_t..nt - trim_t {
        for ix in trim_x..nx - trim_x {
            let idx = j * nx + ix;
            let parts = [
                i * psi_t[idx],
                p.alpha2 * k_at(KOperator::K2, &d, idx, p, opts),
                -i * p.alpha3 * k_at(KOperator::K3, &d, idx, p, opts),
                p.alpha4 * k_at(KOperator::K4, &d, idx, p, opts),
                -i * p.alpha5 * k_at(KOperator::K5, &d, idx, p, opts),
            ];
            let r: Complex64 = parts.iter().sum();
            for (t, v) in terms.iter_mut().zip(&parts) {
                *t = t.max(v.norm());
            }
            sup = sup.max(r.norm());
            l2 += r.norm_sqr();
        }
    }
    let cell = if hx > 0.0 && ht > 0.0 { hx * ht } else { 1.0 };
    let gamma = match opts.gauge {
        GaugeMode::GaugeFixed => 6.0 * p.alpha4 * p.psi0().powi(4),
        GaugeMode::Verbatim => 0.0,
    };
    Ok(ResidualReport {
        sup_norm: sup,
        l2_norm: (l2 * cell).sqrt(),
        per_term_norms: TermNorms { time_derivative: terms[0], k2: terms[1], k3: terms[2], k4: terms[3], k5: terms[4] },
        hx,
        ht,
        gauge_mode: opts.gauge,
        k4_form: opts.k4,
        gamma,
        convergence_order: None,
        trim_x,
        trim_t,
        config_digest: field.meta.config_digest.clone(),
    })
}

/// `max_t ||ψ(x_edge, t)| − ψ0|` over both `x` edges.
pub fn boundary_check(field: &SolutionField, p: &ModelParams) -> f64 {
    let g = &field.grid;
    (0..g.nt)
        .flat_map(|j| [field.at(0, j), field.at(g.nx - 1, j)])
        .map(|v| (v.norm() - p.psi0()).abs())
        .fold(0.0, f64::max)
}

/// `arg ψ(x_right, t_mid) − arg ψ(x_left, t_mid)` in `[0, 2π)`.
pub fn phase_jump(field: &SolutionField) -> f64 {
    let g = &field.grid;
    let j = g.nt / 2;
    reduce_angle(field.at(g.nx - 1, j).arg() - field.at(0, j).arg())
}
