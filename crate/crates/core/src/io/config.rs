//! JSON run configuration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{Engine, EngineError, Grid, SignConvention};
use crate::params::ModelParams;
use crate::spectral::DispersionMode;
use crate::spectrum::{DoubleSpectrum, PoleOrder, SimpleSpectrum, Spectrum};
use crate::verification::{GaugeMode, K4Form, ResidualOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// `[α2, α3, α4, α5]`.
    pub alpha: [f64; 4],
    pub psi_minus: [f64; 2],
    #[serde(default)]
    pub zbc_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryBlock {
    pub z: [f64; 2],
    #[serde(rename = "A")]
    pub a: [f64; 2],
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub pole_order: PoleOrder,
    pub entries: Vec<EntryBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x: (f64, f64, usize),
    pub t: (f64, f64, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesBlock {
    #[serde(default)]
    pub sign: SignConvention,
    #[serde(default)]
    pub dispersion: DispersionMode,
    #[serde(default)]
    pub gauge: GaugeMode,
    #[serde(default)]
    pub k4: K4Form,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Csv,
    Pgm,
    JsonMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub kind: OutputKind,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: ModelBlock,
    pub spectrum: SpectrumBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub modes: ModesBlock,
    #[serde(default)]
    pub outputs: Vec<OutputBlock>,
}

fn cplx(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let psi = cplx(self.model.psi_minus);
        let r = if self.model.zbc_limit {
            ModelParams::zbc_limit(self.model.alpha, psi)
        } else {
            ModelParams::new(self.model.alpha, psi)
        };
        r.map_err(|e| ConfigError::Invalid(vec![format!("model: {e}")]))
    }

    /// The spectrum without validation against the background.
    pub fn spectrum_raw(&self) -> Spectrum {
        let entries = &self.spectrum.entries;
        match self.spectrum.pole_order {
            PoleOrder::Simple => {
                Spectrum::Simple(SimpleSpectrum::new(&entries.iter().map(|e| (cplx(e.z), cplx(e.a))).collect::<Vec<_>>()))
            }
            PoleOrder::Double => Spectrum::Double(DoubleSpectrum::new(
                &entries
                    .iter()
                    .map(|e| (cplx(e.z), cplx(e.a), cplx(e.b.unwrap_or([f64::NAN, f64::NAN]))))
                    .collect::<Vec<_>>(),
            )),
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.x, self.grid.t)
    }

    pub fn residual_options(&self) -> ResidualOptions {
        ResidualOptions { gauge: self.modes.gauge, k4: self.modes.k4 }
    }

    /// Every rule violation, each prefixed with its JSON path.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let params = match self.params() {
            Ok(p) => Some(p),
            Err(ConfigError::Invalid(v)) => {
                out.extend(v);
                None
            }
            Err(e) => {
                out.push(e.to_string());
                None
            }
        };
        for (i, e) in self.spectrum.entries.iter().enumerate() {
            match (self.spectrum.pole_order, e.b) {
                (PoleOrder::Double, None) => {
                    out.push(format!("spectrum.entries[{i}].B: required for pole_order=double"))
                }
                (PoleOrder::Simple, Some(_)) => {
                    out.push(format!("spectrum.entries[{i}].B: only allowed for pole_order=double"))
                }
                _ => {}
            }
        }
        if let Some(p) = params {
            for v in self.spectrum_raw().validate(&p) {
                if !v.starts_with('B') {
                    out.push(format!("spectrum.entries: {v}"));
                }
            }
        }
        for (axis, (a, b, n)) in [("x", self.grid.x), ("t", self.grid.t)] {
            if n == 0 {
                out.push(format!("grid.{axis}: point count must be >= 1"));
            }
            if !a.is_finite() || !b.is_finite() {
                out.push(format!("grid.{axis}: bounds must be finite"));
            } else if n > 1 && b <= a {
                out.push(format!("grid.{axis}: upper bound must exceed lower bound"));
            }
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if o.path.trim().is_empty() {
                out.push(format!("outputs[{i}].path: must not be empty"));
            }
        }
        out
    }

    /// Engine for this configuration (validates first).
    pub fn engine(&self) -> Result<Engine, ConfigError> {
        let errs = self.validate();
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        let p = self.params()?;
        let es = self
            .spectrum_raw()
            .expand(&p)
            .map_err(|e| ConfigError::Invalid(e.0.iter().map(|v| format!("spectrum.entries: {v}")).collect()))?;
        Engine::new(es, p, self.modes.dispersion, self.modes.sign)
            .map_err(|e: EngineError| ConfigError::Invalid(vec![format!("spectrum: {e}")]))
    }

    /// SHA-256 over the model, spectrum and modes. The grid and outputs are
    /// left out so that refinements of one setup share a digest.
    pub fn digest(&self) -> String {
        let physics = serde_json::json!({
            "model": self.model,
            "spectrum": self.spectrum,
            "modes": self.modes,
        });
        hex::encode(Sha256::digest(physics.to_string().as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2A: &str = r#"{
        "model": {"alpha": [1, 0.01, 0.01, 0.01], "psi_minus": [1, 0]},
        "spectrum": {"pole_order": "simple", "entries": [{"z": [0, 1.5], "A": [1, 0]}]},
        "grid": {"x": [-10, 10, 401], "t": [-5, 5, 201]},
        "modes": {"sign": "minus_i", "dispersion": "hierarchy", "gauge": "gauge_fixed", "k4": "integrable"},
        "outputs": [{"kind": "csv", "path": "a.csv"}, {"kind": "json-meta", "path": "a.json"}]
    }"#;

    #[test]
    fn parses_fig2a() {
        let cfg = parse_config(FIG2A).unwrap();
        assert_eq!(cfg.spectrum.entries.len(), 1);
        assert_eq!(cfg.spectrum.entries[0].z, [0.0, 1.5]);
        assert_eq!(cfg.modes.dispersion, DispersionMode::Hierarchy);
        assert!(cfg.engine().is_ok());
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(FIG2A).unwrap();
        assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = FIG2A.replace("\"psi_minus\"", "\"colour\": 1, \"psi_minus\"");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn eigenvalue_inside_circle() {
        let bad = FIG2A.replace("[0, 1.5]", "[0, 0.5]");
        match parse_config(&bad) {
            Err(ConfigError::Invalid(v)) => assert_eq!(v, vec!["spectrum.entries: |z1| ≤ ψ0".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn double_needs_b() {
        let bad = FIG2A.replace("\"simple\"", "\"double\"");
        match parse_config(&bad) {
            Err(ConfigError::Invalid(v)) => {
                assert!(v.iter().any(|s| s.starts_with("spectrum.entries[0].B")), "{v:?}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn digest_ignores_grid_and_outputs() {
        let a = parse_config(FIG2A).unwrap();
        let mut b = a.clone();
        b.grid.x.2 = 801;
        b.outputs.clear();
        assert_eq!(a.digest(), b.digest());
        b.model.alpha[3] = 0.02;
        assert_ne!(a.digest(), b.digest());
    }
}
