//! Piecewise-constant sign-flip controls and their filter functions.
//!
//! A control is `±A_c` on `[0, T]`, starting positive and changing sign at
//! each flip time. Its filter function is `F(ω) = |Ω̃_c(ω)|²/2π`, evaluated
//! exactly as a sum of closed-form segment integrals.

mod bank;
mod bod;

pub use bank::FilterBank;
pub use bod::{band_edges, design_bod, design_bod_with_count, scaled_amplitude, BodDesign, EDGE_SLACK};

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    /// Periodic dynamical decoupling: flips at `t_j = jτ`.
    Pdd,
    /// Carr-Purcell: flips at `t_j = (2j-1)τ/2`.
    Cp,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Pdd => f.write_str("PDD"),
            Protocol::Cp => f.write_str("CP"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    protocol: Protocol,
    tau: f64,
    flips: usize,
    amplitude: f64,
}

/// Constant stretch `[start, end)` of a control at `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl ControlSequence {
    pub fn new(protocol: Protocol, tau: f64, flips: usize, amplitude: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be positive, got {amplitude}")));
        }
        if flips < 2 {
            return Err(Error::invalid(format!("need at least 2 flips, got {flips}")));
        }
        Ok(Self { protocol, tau, flips, amplitude })
    }

    pub fn pdd(tau: f64, flips: usize, amplitude: f64) -> Result<Self> {
        Self::new(Protocol::Pdd, tau, flips, amplitude)
    }

    pub fn cp(tau: f64, flips: usize, amplitude: f64) -> Result<Self> {
        Self::new(Protocol::Cp, tau, flips, amplitude)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn flips(&self) -> usize {
        self.flips
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn with_amplitude(self, amplitude: f64) -> Result<Self> {
        Self::new(self.protocol, self.tau, self.flips, amplitude)
    }

    /// Total duration `T = Mτ`.
    pub fn duration(&self) -> f64 {
        self.flips as f64 * self.tau
    }

    pub fn flip_times(&self) -> Vec<f64> {
        (1..=self.flips)
            .map(|j| match self.protocol {
                Protocol::Pdd => j as f64 * self.tau,
                Protocol::Cp => (2 * j - 1) as f64 * self.tau / 2.0,
            })
            .collect()
    }

    /// Non-empty constant segments covering `[0, T]`.
    pub fn segments(&self) -> Vec<Segment> {
        let total = self.duration();
        let mut out = Vec::with_capacity(self.flips + 1);
        let mut start = 0.0;
        let mut value = self.amplitude;
        for t in self.flip_times().into_iter().chain(std::iter::once(total)) {
            let end = t.min(total);
            if end > start {
                out.push(Segment { start, end, value });
            }
            start = end;
            value = -value;
        }
        out
    }

    /// `Ω_c(t)`: `±A_c` with sign `(-1)^{#{j: t_j ≤ t}}`.
    pub fn signal(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.duration()).contains(&t) {
            return Err(Error::invalid(format!(
                "t = {t} outside control window [0, {}]",
                self.duration()
            )));
        }
        let passed = self.flip_times().iter().filter(|&&tj| tj <= t).count();
        Ok(if passed % 2 == 0 { self.amplitude } else { -self.amplitude })
    }

    /// `Ω̃_c(ω) = ∫ Ω_c(t) e^{-iωt} dt`, summed exactly over segments.
    pub fn fourier_transform(&self, omega: f64) -> Complex64 {
        fourier_of_segments(&self.segments(), omega)
    }

    /// `∫ Ω_c(t)² dt = A_c²·T`.
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.duration()
    }

    /// Main peak `π/τ`.
    pub fn peak_frequency(&self) -> f64 {
        PI / self.tau
    }

    /// Width `4π/(Mτ)` of the main lobe between its two nulls.
    pub fn main_peak_width(&self) -> f64 {
        4.0 * PI / (self.flips as f64 * self.tau)
    }
}

pub(crate) fn fourier_of_segments(segments: &[Segment], omega: f64) -> Complex64 {
    segments
        .iter()
        .map(|s| {
            let len = s.end - s.start;
            let mid = 0.5 * (s.start + s.end);
            // (e^{-iωa} - e^{-iωb})/(iω) = (b-a)·sinc(ω(b-a)/2)·e^{-iω(a+b)/2}
            Complex64::from_polar(s.value * len * sinc(0.5 * omega * len), -omega * mid)
        })
        .sum()
}

/// Unnormalized `sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `F(ω_k) = |Ω̃_c(ω_k)|²/2π` on every grid sample.
pub fn filter_function_numeric(seq: &ControlSequence, grid: &FrequencyGrid) -> Vec<f64> {
    let segments = seq.segments();
    grid.values()
        .map(|w| fourier_of_segments(&segments, w).norm_sqr() / (2.0 * PI))
        .collect()
}

/// Closed form for PDD with `M = 2^m`:
/// `|A τ M sinc(ωτ/2) sin(ωτ/2) Π_{k=0}^{m-2} cos(2^k ωτ)|² / 2π`.
pub fn filter_function_analytic_pdd(seq: &ControlSequence, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    if seq.protocol() != Protocol::Pdd {
        return Err(Error::invalid("analytic filter function is defined for PDD only"));
    }
    let m = seq.flips();
    if m < 4 || !m.is_power_of_two() {
        return Err(Error::invalid(format!("analytic PDD form needs M = 2^k >= 4, got {m}")));
    }
    let log2m = m.trailing_zeros();
    let tau = seq.tau();
    let scale = seq.amplitude() * tau * m as f64;
    Ok(grid
        .values()
        .map(|w| {
            let half = 0.5 * w * tau;
            let product: f64 = (0..log2m - 1).map(|k| ((1u64 << k) as f64 * w * tau).cos()).product();
            let amp = scale * sinc(half) * half.sin() * product;
            amp * amp / (2.0 * PI)
        })
        .collect())
}
