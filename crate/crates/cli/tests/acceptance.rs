//! Acceptance suite. Every criterion runs even if an earlier one fails; each
//! prints a single PASS/FAIL line and the process exits non-zero on any FAIL.

use std::f64::consts::{FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gfonls::calibration::{calibrate_modes, calibrate_sign};
use gfonls::engine::{evaluate_grid, Engine, Grid, SignConvention, SolutionField};
use gfonls::io::{parse_config, RunConfig};
use gfonls::lax::{self, boundary_pair, LaxForm, Verdict};
use gfonls::spectral::{k_of_z, lambda_of_z, theta, DispersionMode};
use gfonls::spectrum::{angle_distance, PoleOrder, SimpleSpectrum, Spectrum};
use gfonls::trace::{contour_points, s11_reflectionless, s22_reflectionless, Contour};
use gfonls::verification::{
    boundary_check, fit_sech, integrate_short_time, phase_jump, residual, stable_dt, GaugeMode, IntegratorOptions,
    K4Form, ResidualOptions,
};
use gfonls::{Complex64, ModelParams, SpectralPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG_ALPHAS: [f64; 4] = [1.0, 0.01, 0.01, 0.01];

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn figures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../figures")
}

fn figure(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(figures_dir().join(format!("{name}.json"))).unwrap();
    parse_config(&text).unwrap()
}

fn engine(p: &ModelParams, spectrum: Spectrum, dispersion: DispersionMode, sign: SignConvention) -> Engine {
    Engine::new(spectrum.expand(p).unwrap(), *p, dispersion, sign).unwrap()
}

fn simple(entries: &[(Complex64, Complex64)]) -> Spectrum {
    Spectrum::Simple(SimpleSpectrum::new(entries))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn random_point(rng: &mut ChaCha8Rng, psi0: f64) -> SpectralPoint {
    loop {
        let z = Complex64::from_polar(psi0 * rng.gen_range(0.1..6.0), rng.gen_range(-PI..PI));
        if let Ok(sp) = SpectralPoint::new(z) {
            return sp;
        }
    }
}

fn background_exactness() -> Outcome {
    let p = ModelParams::new(FIG_ALPHAS, c(1.0, 0.0)).unwrap();
    let e = engine(&p, simple(&[]), DispersionMode::Hierarchy, SignConvention::MinusI);
    let field = evaluate_grid(&e, &Grid::new((-10.0, 10.0, 201), (-5.0, 5.0, 101)), "background").unwrap();
    let expected = p.alpha4.abs() * 6.0 * p.psi0().powi(5);
    let mut pass = true;
    let mut detail = Vec::new();
    for k4 in [K4Form::Printed, K4Form::Integrable] {
        let fixed = residual(&field, &p, ResidualOptions { gauge: GaugeMode::GaugeFixed, k4 }).unwrap().sup_norm;
        let verbatim = residual(&field, &p, ResidualOptions { gauge: GaugeMode::Verbatim, k4 }).unwrap().sup_norm;
        pass &= fixed < 1e-12 && (verbatim - expected).abs() <= 1e-12;
        detail.push(format!("{k4:?}: gauge_fixed {fixed:.2e}, verbatim {verbatim:.15} vs {expected}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn spectral_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let psi0 = rng.gen_range(0.2..2.0);
        let p = ModelParams::new(FIG_ALPHAS, Complex64::from_polar(psi0, rng.gen_range(-PI..PI))).unwrap();
        let z = random_point(&mut rng, psi0);
        let (x, t) = (rng.gen_range(-10.0..10.0), rng.gen_range(-5.0..5.0));
        let w = z.involution(&p);
        let zc = z.conj();
        let (k, l) = (k_of_z(z, &p), lambda_of_z(z, &p));
        let mut pairs = vec![
            (l * l, k * k + psi0 * psi0),
            (k_of_z(w, &p), k),
            (lambda_of_z(w, &p), -l),
            (k_of_z(zc, &p), k.conj()),
            (lambda_of_z(zc, &p), l.conj()),
        ];
        for mode in [DispersionMode::Printed, DispersionMode::Hierarchy] {
            let th = theta(x, t, z, &p, mode).unwrap();
            pairs.push((theta(x, t, w, &p, mode).unwrap(), -th));
            pairs.push((theta(x, t, zc, &p, mode).unwrap(), th.conj()));
        }
        for (a, b) in pairs {
            let err = (a - b).norm() / (1.0 + a.norm().max(b.norm()));
            worst = worst.max(err);
            if !close(a, b, 1e-10) {
                failures += 1;
            }
        }
    }
    Outcome { pass: failures == 0, detail: format!("1000 points, worst relative error {worst:.2e}, {failures} failures") }
}

fn lax_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let configs: Vec<(&str, [f64; 4])> = vec![
        ("a2", [1.0, 0.0, 0.0, 0.0]),
        ("a3", [0.0, 1.0, 0.0, 0.0]),
        ("a4", [0.0, 0.0, 1.0, 0.0]),
        ("a5", [0.0, 0.0, 0.0, 1.0]),
        ("all", FIG_ALPHAS),
        ("mixed", [0.7, -0.3, 0.2, 0.05]),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, alphas) in &configs {
        let p = ModelParams::new(*alphas, c(1.0, 0.0)).unwrap();
        let mut max_comm = 0.0f64;
        let mut max_omega_err = 0.0f64;
        for _ in 0..50 {
            let z = random_point(&mut rng, 1.0);
            if lambda_of_z(z, &p).norm() < 1e-3 {
                continue;
            }
            max_comm = max_comm.max(boundary_pair(z, &p, LaxForm::Printed).relative_commutator());
            if matches!(*name, "a2" | "a3") {
                let printed = gfonls::spectral::dispersion_omega(z, &p, DispersionMode::Printed).unwrap();
                let err = match lax::omega_from_lax(z, &p) {
                    Ok(w) => (w - printed).norm() / (1.0 + printed.norm()),
                    Err(_) => f64::INFINITY,
                };
                max_omega_err = max_omega_err.max(err);
            }
        }
        pass &= max_comm <= 1e-10 && max_omega_err <= 1e-10;
        if matches!(*name, "a2" | "a3") {
            detail.push(format!("{name}: [U,V] {max_comm:.1e}, omega err {max_omega_err:.1e}"));
        } else {
            detail.push(format!("{name}: [U,V] {max_comm:.1e}"));
        }
    }
    let p = ModelParams::new(FIG_ALPHAS, c(1.0, 0.0)).unwrap();
    let points: Vec<SpectralPoint> = (0..50).map(|_| random_point(&mut rng, 1.0)).collect();
    let report = lax::calibrate(&p, &points);
    let verdict = match report.verdict {
        Verdict::PrintedConsistent => "printed-consistent",
        Verdict::PrintedInconsistent => "printed-inconsistent",
    };
    detail.push(format!("all-alpha verdict {verdict} (max commutator {:.2e})", report.max_commutator));
    Outcome { pass, detail: detail.join("; ") }
}

fn dual_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pass = true;
    let mut detail = Vec::new();
    for name in ["fig2a", "fig4a"] {
        let e = figure(name).engine().unwrap();
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let (x, t) = (rng.gen_range(-10.0..10.0), rng.gen_range(-5.0..5.0));
            let a = e.psi_simple_point(x, t).unwrap().psi;
            let b = e.psi_simple_det_point(x, t).unwrap();
            worst = worst.max((a - b).norm() / a.norm());
        }
        pass &= worst <= 1e-10;
        detail.push(format!("{name}: worst relative gap {worst:.2e}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn residual_convergence() -> Outcome {
    let mut detail = Vec::new();
    let signs: Vec<_> = [PoleOrder::Simple, PoleOrder::Double].iter().map(|o| calibrate_sign(*o, 0.02).unwrap()).collect();
    let sign = signs[0].chosen;
    let mut pass = signs.iter().all(|s| s.chosen == sign);
    detail.push(format!("sign {sign:?}"));
    let modes = calibrate_modes(PoleOrder::Simple, FIG_ALPHAS, 0.02).unwrap();
    let accepted = modes.accepted();
    if accepted.len() != 1 {
        return Outcome { pass: false, detail: format!("{} mode candidates converge", accepted.len()) };
    }
    let m = accepted[0];
    detail.push(format!("calibrated {} / {:?} / {:?}", m.dispersion, m.k4, m.gauge));
    let window = |h: f64| Grid::new((-4.0, 4.0, (8.0 / h).round() as usize + 1), (-1.0, 1.0, (2.0 / h).round() as usize + 1));
    for name in ["fig2a", "fig9a"] {
        let mut cfg = figure(name);
        cfg.modes.sign = sign;
        cfg.modes.dispersion = m.dispersion;
        cfg.modes.k4 = m.k4;
        cfg.modes.gauge = m.gauge;
        let e = cfg.engine().unwrap();
        let p = cfg.params().unwrap();
        let sup = |h: f64| {
            let f = evaluate_grid(&e, &window(h), &cfg.digest()).unwrap();
            residual(&f, &p, cfg.residual_options()).unwrap().sup_norm
        };
        let (coarse, fine) = (sup(0.02), sup(0.01));
        let factor = coarse / fine;
        pass &= (11.0..=22.0).contains(&factor);
        detail.push(format!("{name}: {coarse:.2e} -> {fine:.2e}, factor {factor:.2}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn boundary_and_phase() -> Outcome {
    let grid = Grid::new((-25.0, 25.0, 3), (-5.0, 5.0, 101));
    let p_pi = ModelParams::new(FIG_ALPHAS, c(0.3, 0.0)).unwrap();
    let cases: Vec<(&str, ModelParams, Spectrum, f64)> = vec![
        ("fig2a", figure("fig2a").params().unwrap(), figure("fig2a").spectrum_raw(), 0.0),
        ("fig9a", figure("fig9a").params().unwrap(), figure("fig9a").spectrum_raw(), 0.0),
        ("z1=e^{i pi/4}, psi0=0.3", p_pi, simple(&[(Complex64::from_polar(1.0, FRAC_PI_4), c(1.0, 0.0))]), PI),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, p, spectrum, expected) in cases {
        let e = engine(&p, spectrum.clone(), DispersionMode::Hierarchy, SignConvention::MinusI);
        let field: SolutionField = evaluate_grid(&e, &grid, name).unwrap();
        let edge = boundary_check(&field, &p);
        let jump = phase_jump(&field);
        let predicted = spectrum.theta_condition();
        let ok = edge <= 1e-5 && angle_distance(jump, predicted) <= 1e-3 && angle_distance(predicted, expected) <= 1e-12;
        pass &= ok;
        detail.push(format!("{name}: edge {edge:.1e}, jump {jump:.6} vs {predicted:.6}"));
    }
    // the near-circle variant used for the figure decays too slowly for |x| = 25
    let cfg = figure("fig3a");
    let p = cfg.params().unwrap();
    let e = cfg.engine().unwrap();
    let wide = evaluate_grid(&e, &Grid::new((-800.0, 800.0, 3), (-1.0, 1.0, 3)), "fig3a").unwrap();
    let near = evaluate_grid(&e, &Grid::new((-25.0, 25.0, 3), (-1.0, 1.0, 3)), "fig3a").unwrap();
    detail.push(format!(
        "fig3a (info): edge at 25 {:.2e}, at 800 {:.1e}, jump {:.6}",
        boundary_check(&near, &p),
        boundary_check(&wide, &p),
        phase_jump(&wide)
    ));
    Outcome { pass, detail: detail.join("; ") }
}

fn trace_formulae() -> Outcome {
    let p = ModelParams::new(FIG_ALPHAS, c(1.0, 0.0)).unwrap();
    let cases: Vec<(&str, Spectrum)> = vec![
        ("fig2a", figure("fig2a").spectrum_raw()),
        ("fig4a", figure("fig4a").spectrum_raw()),
        ("fig8a", figure("fig8a").spectrum_raw()),
        ("fig9a", figure("fig9a").spectrum_raw()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut real_dev, mut circle_dev, mut product_dev, mut zero_dev, mut limit_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (_, s) in &cases {
        let eig = s.eigenvalues();
        let ord = s.pole_order();
        let s11 = |z: Complex64| s11_reflectionless(z, &eig, &p, ord).unwrap();
        for z in contour_points(Contour::Real, &p, 100) {
            real_dev = real_dev.max((s11(z).norm() - 1.0).abs());
        }
        for z in contour_points(Contour::Circle, &p, 100) {
            circle_dev = circle_dev.max((s11(z).norm() - 1.0).abs());
        }
        for _ in 0..100 {
            let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if let (Ok(a), Ok(b)) = (s11_reflectionless(z, &eig, &p, ord), s22_reflectionless(z, &eig, &p, ord)) {
                product_dev = product_dev.max((a * b - 1.0).norm());
            }
        }
        for zn in &eig {
            for xi in [*zn, -p.psi0() * p.psi0() / zn.conj()] {
                zero_dev = zero_dev.max(s11(xi).norm());
            }
        }
        let near_zero = s11(c(1e-9, 1e-9));
        limit_dev = limit_dev.max(angle_distance(near_zero.arg(), s.theta_condition()));
    }
    let pass = real_dev <= 1e-12 && circle_dev <= 1e-12 && product_dev <= 1e-12 && zero_dev <= 1e-12 && limit_dev <= 1e-6;
    Outcome {
        pass,
        detail: format!(
            "||s11|-1| real {real_dev:.1e}, circle {circle_dev:.2e}; |s11 s22 - 1| {product_dev:.1e}; |s11(xi)| {zero_dev:.1e}; arg limit {limit_dev:.1e}"
        ),
    }
}

fn short_time_oracle() -> Outcome {
    let p = ModelParams::new([1.0, 0.0, 0.0, 0.0], c(1.0, 0.0)).unwrap();
    let hx = 0.01;
    let nx = 4001;
    let t_end = 0.1;
    let steps = (t_end / stable_dt(&p, hx)).ceil() as usize + 1;
    let dt = t_end / steps as f64;
    let grid = Grid::with_spacing(-20.0, hx, nx, 0.0, t_end, 2);
    let interior: Vec<usize> = (0..nx).filter(|&i| grid.x(i).abs() <= 15.0).collect();
    let mismatch = |sign: SignConvention| {
        let e = engine(&p, simple(&[(c(0.0, 1.5), c(1.0, 0.0))]), DispersionMode::Printed, sign);
        let field = evaluate_grid(&e, &grid, "nls").unwrap();
        let opts = IntegratorOptions::new(hx, ResidualOptions::default());
        let evolved = integrate_short_time(field.row(0), &p, dt, steps, opts).unwrap();
        interior.iter().map(|&i| (evolved[i] - field.at(i, 1)).norm()).fold(0.0, f64::max)
    };
    let kept = mismatch(SignConvention::MinusI);
    let rejected = mismatch(SignConvention::PlusI);
    Outcome {
        pass: kept <= 1e-3 && rejected > 1e-1 && rejected >= 100.0 * kept,
        detail: format!("minus_i {kept:.2e}, plus_i {rejected:.2e}, {steps} RK4 steps"),
    }
}

fn zbc_limit() -> Outcome {
    let xs: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
    let rows: Vec<Vec<Complex64>> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&psi| {
            let p = ModelParams::auto(FIG_ALPHAS, c(psi, 0.0)).unwrap();
            let e = engine(&p, simple(&[(c(0.0, 1.5), c(1.0, 0.0))]), DispersionMode::Hierarchy, SignConvention::MinusI);
            xs.iter().map(|&x| e.psi(x, 0.0)).collect()
        })
        .collect();
    let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let (d1, d2) = (diff(&rows[0], &rows[1]), diff(&rows[1], &rows[2]));
    let mags: Vec<f64> = rows[2].iter().map(|v| v.norm()).collect();
    let fit = fit_sech(&xs, &mags).unwrap();
    Outcome {
        pass: d1 / d2 >= 10.0 && fit.relative_residual < 1e-3,
        detail: format!(
            "differences {d1:.3e}, {d2:.3e} (ratio {:.7}); sech fit A={:.4} B={:.4} x0={:.2e} residual {:.2e}",
            d1 / d2,
            fit.amplitude,
            fit.width,
            fit.center,
            fit.relative_residual
        ),
    }
}

fn simulate(cfg: &Path, out: &Path, workers: usize) -> Result<serde_json::Value, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_gfonls"))
        .args(["simulate", "-c"])
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(["--workers", &workers.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{}: exit {:?}: {}", cfg.display(), o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn figure_reproduction() -> Outcome {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(figures_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    configs.sort();
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut flagged = Vec::new();
    let mut mismatched = Vec::new();
    for cfg in &configs {
        let metas: Vec<_> = [(0, 1), (1, 1), (2, 4)]
            .iter()
            .map(|&(d, w)| simulate(cfg, dirs[d].path(), w))
            .collect::<Result<_, _>>()
            .unwrap_or_else(|e| panic!("{e}"));
        if metas[0]["flagged_points"] != 0 {
            flagged.push(format!("{} ({})", cfg.display(), metas[0]["flagged_points"]));
        }
        let stem = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        for ext in ["csv", "pgm", "meta.json"] {
            let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(format!("{stem}.{ext}"))).unwrap();
            let first = read(&dirs[0]);
            if dirs[1..].iter().any(|d| read(d) != first) {
                mismatched.push(format!("{stem}.{ext}"));
            }
        }
    }
    Outcome {
        pass: flagged.is_empty() && mismatched.is_empty() && configs.len() == 28,
        detail: format!(
            "{} configs, 3 runs (workers 1, 1, 4); flagged: {flagged:?}; differing outputs: {mismatched:?}",
            configs.len()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("background exactness", 1, background_exactness),
        ("spectral identities", 1, spectral_identities),
        ("Lax pair commutation and dispersion", 5, lax_calibration),
        ("solve vs determinant reconstruction", 10, dual_path),
        ("PDE residual convergence", 120, residual_convergence),
        ("boundary values and phase jump", 30, boundary_and_phase),
        ("trace formulae", 1, trace_formulae),
        ("short-time integration oracle", 120, short_time_oracle),
        ("zero-background limit", 30, zbc_limit),
        ("figure reproduction", 300, figure_reproduction),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, (name, limit, run)) in criteria.iter().enumerate() {
        let id = format!("AC{}", n + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.eq_ignore_ascii_case(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                Outcome { pass: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
            });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{id} {name}: {} [{:.2}s of {limit}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
