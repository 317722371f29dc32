//! Empirical selection of the reconstruction sign and of the
//! (dispersion, K4, gauge) reading, using the residual as the arbiter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{evaluate_grid, Engine, EngineError, Grid, SignConvention};
use crate::params::{ModelParams, ParamsError};
use crate::spectral::DispersionMode;
use crate::spectrum::{DoubleSpectrum, PoleOrder, SimpleSpectrum, Spectrum, ValidationError};
use crate::verification::{residual, GaugeMode, K4Form, ResidualOptions, VerifyError};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Spectrum(#[from] ValidationError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Reduction factor window for a 4th-order scheme when `h` is halved.
pub const FOURTH_ORDER_WINDOW: (f64, f64) = (11.0, 22.0);

/// The reference problem: `N = 1`, `z1 = 1.5i`, `A+ = B+ = 1`, `ψ− = 1`.
pub fn reference_spectrum(order: PoleOrder) -> Spectrum {
    let z = Complex64::new(0.0, 1.5);
    let one = Complex64::new(1.0, 0.0);
    match order {
        PoleOrder::Simple => Spectrum::Simple(SimpleSpectrum::new(&[(z, one)])),
        PoleOrder::Double => Spectrum::Double(DoubleSpectrum::new(&[(z, one, one)])),
    }
}

/// Square window `[-half_x, half_x] × [-half_t, half_t]` with spacing `h`.
pub fn window(half_x: f64, half_t: f64, h: f64) -> Grid {
    let nx = (2.0 * half_x / h).round() as usize + 1;
    let nt = (2.0 * half_t / h).round() as usize + 1;
    Grid::new((-half_x, half_x, nx), (-half_t, half_t, nt))
}

pub fn residual_sup(
    spectrum: &Spectrum,
    p: &ModelParams,
    dispersion: DispersionMode,
    sign: SignConvention,
    opts: ResidualOptions,
    grid: &Grid,
) -> Result<f64, CalibrationError> {
    let engine = Engine::new(spectrum.expand(p)?, *p, dispersion, sign)?;
    let field = evaluate_grid(&engine, grid, "calibration")?;
    Ok(residual(&field, p, opts)?.sup_norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCalibration {
    pub pole_order: PoleOrder,
    pub h: f64,
    pub residual_minus_i: f64,
    pub residual_plus_i: f64,
    pub chosen: SignConvention,
}

/// Pure-NLS reduction (`α2 = 1`) of the reference problem; the sign with the
/// smaller residual wins.
pub fn calibrate_sign(order: PoleOrder, h: f64) -> Result<SignCalibration, CalibrationError> {
    let p = ModelParams::new([1.0, 0.0, 0.0, 0.0], Complex64::new(1.0, 0.0))?;
    let spectrum = reference_spectrum(order);
    let grid = window(3.0, 0.5, h);
    let opts = ResidualOptions::default();
    let run = |s| residual_sup(&spectrum, &p, DispersionMode::Printed, s, opts, &grid);
    let (minus, plus) = (run(SignConvention::MinusI)?, run(SignConvention::PlusI)?);
    Ok(SignCalibration {
        pole_order: order,
        h,
        residual_minus_i: minus,
        residual_plus_i: plus,
        chosen: if minus <= plus { SignConvention::MinusI } else { SignConvention::PlusI },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCandidate {
    pub dispersion: DispersionMode,
    pub k4: K4Form,
    pub gauge: GaugeMode,
    pub sup_coarse: f64,
    pub sup_fine: f64,
    pub reduction: f64,
    pub converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCalibration {
    pub pole_order: PoleOrder,
    pub h_coarse: f64,
    pub candidates: Vec<ModeCandidate>,
}

impl ModeCalibration {
    pub fn accepted(&self) -> Vec<&ModeCandidate> {
        self.candidates.iter().filter(|c| c.converges).collect()
    }
}

/// Runs every (dispersion, K4, gauge) reading on the reference problem with
/// all four coefficients active and records which ones converge at 4th order.
pub fn calibrate_modes(
    order: PoleOrder,
    alphas: [f64; 4],
    h_coarse: f64,
) -> Result<ModeCalibration, CalibrationError> {
    let p = ModelParams::new(alphas, Complex64::new(1.0, 0.0))?;
    let spectrum = reference_spectrum(order);
    let coarse = window(3.0, 1.0, h_coarse);
    let fine = window(3.0, 1.0, h_coarse / 2.0);
    let mut candidates = Vec::new();
    for dispersion in [DispersionMode::Printed, DispersionMode::Hierarchy] {
        for k4 in [K4Form::Printed, K4Form::Integrable] {
            for gauge in [GaugeMode::GaugeFixed, GaugeMode::Verbatim] {
                let opts = ResidualOptions { gauge, k4 };
                let sc = residual_sup(&spectrum, &p, dispersion, SignConvention::MinusI, opts, &coarse)?;
                let sf = residual_sup(&spectrum, &p, dispersion, SignConvention::MinusI, opts, &fine)?;
                let reduction = sc / sf;
                candidates.push(ModeCandidate {
                    dispersion,
                    k4,
                    gauge,
                    sup_coarse: sc,
                    sup_fine: sf,
                    reduction,
                    converges: (FOURTH_ORDER_WINDOW.0..=FOURTH_ORDER_WINDOW.1).contains(&reduction),
                });
            }
        }
    }
    Ok(ModeCalibration { pole_order: order, h_coarse, candidates })
}
