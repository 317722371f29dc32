//! Method-of-lines integrator: 4th-order spatial stencils, classical RK4 in
//! time, and an absorbing layer that relaxes the padded edges toward the
//! boundary values.

use num_complex::Complex64;

use super::stencil::{central_half_width, fornberg_weights};
use super::{time_derivative_row, ResidualOptions, VerifyError};
use crate::params::ModelParams;

/// RK4 stability margin on the imaginary axis (the exact limit is `2√2`).
pub const RK4_IMAG_LIMIT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub hx: f64,
    pub residual: ResidualOptions,
    /// Width of each padded absorbing layer as a fraction of the input row.
    pub layer_fraction: f64,
    /// Peak relaxation rate inside the layer.
    pub damping: f64,
}

impl IntegratorOptions {
    pub fn new(hx: f64, residual: ResidualOptions) -> Self {
        Self { hx, residual, layer_fraction: 0.1, damping: 20.0 }
    }
}

/// `max_θ |Σ w_k e^{ikθ}|` of the centred stencil (unit spacing).
fn symbol_radius(order: usize) -> f64 {
    let r = central_half_width(order) as i64;
    let nodes: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
    let w = fornberg_weights(0.0, &nodes, order);
    (0..=512)
        .map(|q| {
            let th = std::f64::consts::PI * q as f64 / 512.0;
            w.iter()
                .zip(&nodes)
                .map(|(w, k)| Complex64::from_polar(*w, k * th))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Largest stable step: `dt ≤ c / Σ |α_m| ρ_m / hx^m` with `c = 2.5` and
/// `ρ_m` the symbol radius of the `m`-th derivative stencil. For a pure
/// fifth-order flow this is `dt ≤ c·hx⁵/(|α5| ρ5)`.
pub fn stable_dt(p: &ModelParams, hx: f64) -> f64 {
    let alphas = p.alphas();
    let lin: f64 = (2..=5).map(|m| alphas[m - 2].abs() * symbol_radius(m) / hx.powi(m as i32)).sum();
    // the cubic terms contribute roughly 6ψ0²|α2| + O(α3..α5) frequencies
    let nonlinear = 6.0 * p.psi0().powi(2) * alphas.iter().map(|a| a.abs()).sum::<f64>() + 1.0;
    RK4_IMAG_LIMIT / (lin + nonlinear)
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Advances `initial_row` by `steps` RK4 steps of size `dt` and returns the
/// row on the original points.
pub fn integrate_short_time(
    initial_row: &[Complex64],
    p: &ModelParams,
    dt: f64,
    steps: usize,
    opts: IntegratorOptions,
) -> Result<Vec<Complex64>, VerifyError> {
    let bound = stable_dt(p, opts.hx);
    if dt > bound {
        return Err(VerifyError::StepTooLarge { dt, bound });
    }
    let n = initial_row.len();
    if n < 9 {
        return Err(VerifyError::GridTooSmall { points: n, needed: 9 });
    }
    let layer = ((opts.layer_fraction * n as f64).ceil() as usize).max(8);
    let (left, right) = (initial_row[0], initial_row[n - 1]);
    let mut u: Vec<Complex64> = std::iter::repeat(left)
        .take(layer)
        .chain(initial_row.iter().copied())
        .chain(std::iter::repeat(right).take(layer))
        .collect();
    let total = u.len();
    let sigma_max = opts.damping.min(RK4_IMAG_LIMIT / dt);
    let sigma: Vec<f64> = (0..total)
        .map(|i| {
            let depth = if i < layer {
                (layer - i) as f64 / layer as f64
            } else if i >= layer + n {
                (i + 1 - layer - n) as f64 / layer as f64
            } else {
                0.0
            };
            sigma_max * depth * depth
        })
        .collect();
    let target: Vec<Complex64> = (0..total).map(|i| if i < layer + n / 2 { left } else { right }).collect();
    let rhs = |u: &[Complex64]| -> Result<Vec<Complex64>, VerifyError> {
        let mut f = time_derivative_row(u, opts.hx, p, opts.residual)?;
        for i in 0..total {
            f[i] -= sigma[i] * (u[i] - target[i]);
        }
        Ok(f)
    };
    let initial = sup(&u);
    let axpy = |u: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
        u.iter().zip(k).map(|(u, k)| u + k * a).collect()
    };
    for step in 0..steps {
        let k1 = rhs(&u)?;
        let k2 = rhs(&axpy(&u, &k1, 0.5 * dt))?;
        let k3 = rhs(&axpy(&u, &k2, 0.5 * dt))?;
        let k4 = rhs(&axpy(&u, &k3, dt))?;
        for i in 0..total {
            u[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        let norm = sup(&u);
        if !(norm <= 10.0 * initial.max(f64::MIN_POSITIVE)) {
            return Err(VerifyError::Unstable { step: step + 1, norm, initial });
        }
    }
    Ok(u[layer..layer + n].to_vec())
}
