//! Least-squares fit of `A sech(B (x − x0))` by damped Gauss–Newton.

use serde::{Deserialize, Serialize};

use super::VerifyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SechFit {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    /// `‖model − data‖₂ / ‖data‖₂`.
    pub relative_residual: f64,
}

fn model(p: [f64; 3], x: f64) -> f64 {
    p[0] / (p[1] * (x - p[2])).cosh()
}

fn residual_norm(p: [f64; 3], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(x, y)| (model(p, *x) - y).powi(2)).sum::<f64>().sqrt()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for k in 0..3 {
        let piv = (k..3).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k] == 0.0 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..3 {
            let m = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (b[i] - (i + 1..3).map(|j| a[i][j] * x[j]).sum::<f64>()) / a[i][i];
    }
    Some(x)
}

pub fn fit_sech(xs: &[f64], ys: &[f64]) -> Result<SechFit, VerifyError> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(VerifyError::Fit("need at least 4 samples of matching length".into()));
    }
    let (imax, &amp) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| VerifyError::Fit("empty data".into()))?;
    if amp <= 0.0 {
        return Err(VerifyError::Fit("profile has no positive peak".into()));
    }
    let above = ys.iter().zip(xs).filter(|(y, _)| **y >= 0.5 * amp).map(|(_, x)| *x);
    let (lo, hi) = above.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    let half = (0.5 * (hi - lo)).max(1e-3);
    let mut p = [amp, 2f64.acosh() / half, xs[imax]];
    let mut mu = 1e-3;
    let mut cost = residual_norm(p, xs, ys);
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (x, y) in xs.iter().zip(ys) {
            let u = p[1] * (x - p[2]);
            let s = 1.0 / u.cosh();
            let th = u.tanh();
            let f = p[0] * s;
            let j = [s, -f * th * (x - p[2]), f * th * p[1]];
            let r = f - y;
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut damped = jtj;
        for (a, row) in damped.iter_mut().enumerate() {
            row[a] += mu * jtj[a][a].max(1e-300);
        }
        let step = solve3(damped, jtr.map(|v| -v)).ok_or_else(|| VerifyError::Fit("singular normal equations".into()))?;
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let trial_cost = residual_norm(trial, xs, ys);
        if trial_cost < cost {
            let done = (cost - trial_cost) <= 1e-15 * cost.max(1e-300);
            p = trial;
            cost = trial_cost;
            mu = (mu * 0.3).max(1e-12);
            if done {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    let norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
    Ok(SechFit { amplitude: p[0], width: p[1].abs(), center: p[2], relative_residual: cost / norm })
}
