//! Reflectionless soliton and breather solutions of the general fifth-order
//! nonlinear Schrödinger equation on a nonzero background.
//!
//! ```text
//! iψt + α2 K2[ψ] − iα3 K3[ψ] + α4 K4[ψ] − iα5 K5[ψ] = 0,   ψ → ψ± as x → ±∞
//! ```

pub mod calibration;
pub mod engine;
pub mod io;
pub mod lax;
pub mod linalg;
pub mod params;
pub mod spectral;
pub mod spectrum;
pub mod trace;
pub mod verification;

pub use num_complex::Complex64;
pub use params::ModelParams;
pub use spectral::{DispersionMode, RegionTag, SpectralPoint};
