//! Noise spectroscopy with dynamically decoupled qubit probes.
//!
//! A probe driven by a ±A control `Ω_c(t)` accumulates an overlap
//! `χ = ∫ S(ω) F(ω) dω` between the noise spectrum and its filter function.
//! Collecting `χ_n` for a bank of controls and inverting the Gramian system
//! reconstructs `S`.

pub mod controls;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod noisesim;
pub mod registry;
pub mod spectra;

pub use error::{Error, Result};
