//! Field writers: CSV, binary PGM of |ψ|, and JSON metadata.

use std::fmt::Write as _;
use std::io;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::RunConfig;
use crate::engine::{FieldMeta, Grid, SolutionField};
use crate::verification::{GaugeMode, K4Form};

pub const CSV_HEADER: &str = "x,t,re,im,abs,flag";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("pgm needs at least 2x2 points, got {nx}x{nt}")]
    PgmTooSmall { nx: usize, nt: usize },
}

/// One row per node, `t`-outer, every float in `{:.16e}` so it reads back
/// bit-for-bit. `flag` is 1 for any flagged node.
pub fn csv_string(field: &SolutionField) -> String {
    let g = &field.grid;
    let mut s = String::with_capacity(g.len() * 110 + 32);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for j in 0..g.nt {
        let t = g.t(j);
        for i in 0..g.nx {
            let idx = j * g.nx + i;
            let v = field.values[idx];
            writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}", g.x(i), t, v.re, v.im, v.norm(), u8::from(field.flags[idx] != 0))
                .unwrap();
        }
    }
    s
}

pub fn write_csv(field: &SolutionField, path: &std::path::Path) -> Result<(), OutputError> {
    std::fs::write(path, csv_string(field))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub values: Vec<Complex64>,
    pub flags: Vec<u8>,
}

impl CsvField {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    /// Uniform grid matching the sample coordinates.
    pub fn grid(&self) -> Grid {
        let (x0, x1) = (self.xs[0], *self.xs.last().unwrap());
        let (t0, t1) = (self.ts[0], *self.ts.last().unwrap());
        Grid::new((x0, x1, self.nx()), (t0, t1, self.nt()))
    }

    pub fn into_field(self, meta: FieldMeta) -> SolutionField {
        let grid = self.grid();
        SolutionField { grid, values: self.values, flags: self.flags, meta }
    }
}

pub fn read_csv(text: &str) -> Result<CsvField, OutputError> {
    let err = |line: usize, message: String| OutputError::Csv { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(err(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut xs = Vec::new();
    let mut ts: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    let mut flags = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(err(line_no, format!("expected 6 columns, got {}", cols.len())));
        }
        let f = |k: usize| cols[k].trim().parse::<f64>().map_err(|e| err(line_no, format!("column {}: {e}", k + 1)));
        let (x, t, re, im) = (f(0)?, f(1)?, f(2)?, f(3)?);
        let flag = match cols[5].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(err(line_no, format!("column 6: flag must be 0 or 1, got `{other}`"))),
        };
        if ts.last() != Some(&t) {
            ts.push(t);
        }
        if ts.len() == 1 {
            xs.push(x);
        }
        values.push(Complex64::new(re, im));
        flags.push(flag);
    }
    if xs.is_empty() || values.len() != xs.len() * ts.len() {
        return Err(err(0, "rows do not form a rectangular grid".into()));
    }
    Ok(CsvField { xs, ts, values, flags })
}

/// Binary PGM of `|ψ|`, 8-bit, min-max scaled. Row 0 is `t0`.
pub fn pgm_bytes(field: &SolutionField) -> Result<Vec<u8>, OutputError> {
    let g = &field.grid;
    if g.nx < 2 || g.nt < 2 {
        return Err(OutputError::PgmTooSmall { nx: g.nx, nt: g.nt });
    }
    let mags: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
    let finite = mags.iter().copied().filter(|m| m.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m), b.max(m)));
    let degenerate = !(hi > lo);
    let mut header = format!("P5\n# min={lo:.16e} max={hi:.16e} digest={}", field.meta.config_digest);
    if degenerate {
        header.push_str(" degenerate");
    }
    header.push_str(&format!("\n{} {}\n255\n", g.nx, g.nt));
    let mut out = header.into_bytes();
    out.extend(mags.iter().map(|&m| {
        if degenerate || !m.is_finite() {
            128
        } else {
            (255.0 * (m - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
        }
    }));
    Ok(out)
}

pub fn write_pgm(field: &SolutionField, path: &std::path::Path) -> Result<(), OutputError> {
    std::fs::write(path, pgm_bytes(field)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    #[serde(flatten)]
    pub field: FieldMeta,
    pub gauge_mode: GaugeMode,
    pub k4_form: K4Form,
    pub grid: Grid,
    pub theta_condition: String,
}

impl RunMetadata {
    pub fn new(field: &SolutionField, cfg: &RunConfig) -> Self {
        Self {
            field: field.meta.clone(),
            gauge_mode: cfg.modes.gauge,
            k4_form: cfg.modes.k4,
            grid: field.grid,
            theta_condition: crate::spectrum::format_theta(&cfg.spectrum_raw()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes") + "\n"
    }
}

pub fn write_metadata(meta: &RunMetadata, path: &std::path::Path) -> Result<(), OutputError> {
    std::fs::write(path, meta.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FieldMeta, SignConvention};
    use crate::spectral::DispersionMode;
    use crate::spectrum::PoleOrder;

    fn meta() -> FieldMeta {
        FieldMeta {
            config_digest: "abc".into(),
            pole_order: PoleOrder::Simple,
            sign_convention: SignConvention::MinusI,
            dispersion_mode: DispersionMode::Hierarchy,
            gamma: 0.0,
            max_condition_estimate: 1.0,
            flagged_points: 0,
            clamped_points: 0,
            ill_conditioned_points: 0,
            library_version: "0".into(),
        }
    }

    fn field(f: impl Fn(f64, f64) -> Complex64) -> SolutionField {
        let grid = Grid::new((-1.0, 1.0, 7), (0.0, 0.3, 4));
        let mut values = Vec::new();
        for j in 0..grid.nt {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.t(j)));
            }
        }
        SolutionField::from_values(grid, values, meta())
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = field(|x, t| Complex64::new((x * 1.234567).sin() / 3.0, t.exp() * 1e-17));
        let back = read_csv(&csv_string(&f)).unwrap();
        assert_eq!(back.nx(), 7);
        assert_eq!(back.nt(), 4);
        for (a, b) in f.values.iter().zip(&back.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn single_point_csv() {
        let grid = Grid::new((0.5, 0.5, 1), (2.0, 2.0, 1));
        let mut f = SolutionField::from_values(grid, vec![Complex64::new(0.0, -1.0)], meta());
        f.flags[0] = 6;
        let s = csv_string(&f);
        assert_eq!(s.lines().count(), 2);
        assert!(s.ends_with(",1\n"));
        assert_eq!(read_csv(&s).unwrap().flags, vec![1]);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(read_csv("a,b\n").is_err());
    }

    #[test]
    fn pgm_layout() {
        let f = field(|x, t| Complex64::new(x + t, 0.0));
        let bytes = pgm_bytes(&f).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("P5\n# min="));
        assert!(text.contains("digest=abc"));
        let pixels = &bytes[bytes.len() - 28..];
        assert_eq!(pixels[3], 0);
        assert_eq!(pixels[27], 255);
    }

    #[test]
    fn pgm_degenerate() {
        let f = field(|_, _| Complex64::new(2.0, 0.0));
        let bytes = pgm_bytes(&f).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("degenerate"));
        assert!(bytes[bytes.len() - 28..].iter().all(|&b| b == 128));
    }

    #[test]
    fn pgm_too_small() {
        let grid = Grid::new((0.0, 1.0, 1), (0.0, 1.0, 3));
        let f = SolutionField::from_values(grid, vec![Complex64::new(0.0, 0.0); 3], meta());
        assert!(matches!(pgm_bytes(&f), Err(OutputError::PgmTooSmall { .. })));
    }
}
