//! Synthetic noise and simulated overlap measurements.
//!
//! Noise is a harmonic superposition
//! `Ω(t) = Σ_k A_k cos(ω_k t + φ_k)` with `A_k = √(2 w_k S(ω_k) Δω / π)`,
//! where `w_k` are trapezoid end weights (½ at the ends, 1 elsewhere), so the
//! variance equals `g(0) = (1/2π)∫S dω` over the whole real axis. Phases come
//! from a ChaCha stream keyed by `(seed, draw_index)`.
//!
//! One measurement shot for control `n` yields `y = ∫ Ω_c(t) Ω(t) dt` and
//! the estimate of `χ_n` is the sample mean of `y²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{fourier_of_segments, ControlSequence, FilterBank};
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::spectra::{FrequencyGrid, SpectralDensity};

/// Default synthesis spacing, 2π·1 kHz.
pub const SYNTHESIS_STEP: f64 = 2.0 * PI * 1e3;

#[derive(Debug, Clone)]
pub struct NoiseModel {
    sd: SpectralDensity,
    grid: FrequencyGrid,
    seed: u64,
    amplitudes: Vec<f64>,
}

impl NoiseModel {
    /// Synthesis grid `[0, support_end]` at [`SYNTHESIS_STEP`].
    pub fn new(sd: SpectralDensity, seed: u64) -> Result<Self> {
        let grid = FrequencyGrid::new(sd.support_end(), SYNTHESIS_STEP)?;
        Self::with_grid(sd, grid, seed)
    }

    pub fn with_grid(sd: SpectralDensity, grid: FrequencyGrid, seed: u64) -> Result<Self> {
        if grid.last() < sd.support_end() * (1.0 - 1e-12) {
            return Err(Error::GridTooCoarse(format!(
                "synthesis grid ends at {:e} rad/s below spectrum support {:e}",
                grid.last(),
                sd.support_end()
            )));
        }
        let dw = grid.delta_omega();
        let last = grid.len() - 1;
        let amplitudes = sd
            .sample(&grid)
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let w = if k == 0 || k == last { 0.5 } else { 1.0 };
                (2.0 * w * s * dw / PI).sqrt()
            })
            .collect();
        Ok(Self { sd, grid, seed, amplitudes })
    }

    pub fn spectrum(&self) -> &SpectralDensity {
        &self.sd
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Variance of the synthesized process, `Σ A_k²/2`.
    pub fn variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }

    /// Phases `φ_k` of one realization.
    pub fn phases(&self, draw_index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index);
        (0..self.amplitudes.len()).map(|_| rng.gen::<f64>() * 2.0 * PI).collect()
    }
}

/// `Ω(t)` at the given times for realization `draw_index`.
pub fn generate_realization(model: &NoiseModel, times: &[f64], draw_index: u64) -> Vec<f64> {
    let phases = model.phases(draw_index);
    times
        .iter()
        .map(|&t| {
            model
                .amplitudes
                .iter()
                .zip(&phases)
                .enumerate()
                .filter(|(_, (a, _))| **a != 0.0)
                .map(|(k, (a, p))| a * (model.grid.omega(k) * t + p).cos())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    Exact,
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub mode: MeasurementMode,
    pub seed: Option<u64>,
    pub samples: usize,
    pub chi: Vec<f64>,
    /// `y²` per filter (rows) and realization (columns).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<Vec<f64>>>,
}

impl MeasurementSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Sample standard deviation of `y²` for each filter.
    pub fn sample_std(&self) -> Option<Vec<f64>> {
        let rows = self.per_sample.as_ref()?;
        Some(
            rows.iter()
                .zip(&self.chi)
                .map(|(row, mean)| {
                    let n = row.len() as f64;
                    if row.len() < 2 {
                        return 0.0;
                    }
                    (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                })
                .collect(),
        )
    }

    pub fn without_samples(mut self) -> Self {
        self.per_sample = None;
        self
    }
}

/// Checks that `grid` resolves and covers `sd`.
pub fn check_coverage(sd: &SpectralDensity, grid: &FrequencyGrid) -> Result<()> {
    if grid.last() < sd.support_end() * (1.0 - 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "grid ends at {:e} rad/s, spectrum extends to {:e}",
            grid.last(),
            sd.support_end()
        )));
    }
    if let Some(width) = sd.min_width() {
        if grid.delta_omega() > width / 4.0 {
            return Err(Error::GridTooCoarse(format!(
                "delta_omega {:e} does not resolve spectral width {:e}",
                grid.delta_omega(),
                width
            )));
        }
    }
    Ok(())
}

/// `χ_n = ∫ S F_n dω` by two-sided quadrature on the bank grid.
pub fn chi_exact(sd: &SpectralDensity, bank: &FilterBank) -> Result<MeasurementSet> {
    check_coverage(sd, bank.grid())?;
    let chi = bank.overlaps(&sd.sample(bank.grid()))?;
    Ok(MeasurementSet { mode: MeasurementMode::Exact, seed: None, samples: 0, chi, per_sample: None })
}

/// Computes the single-shot overlap `y` of one control with realizations.
pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns `draw_index ↦ y`. `tau_min` is the shortest interpulse
    /// duration in the bank.
    fn prepare<'a>(
        &self,
        model: &'a NoiseModel,
        seq: &ControlSequence,
        tau_min: f64,
    ) -> Result<Box<dyn Fn(u64) -> f64 + Send + Sync + 'a>>;
}

/// Exact time integral of every harmonic against the control:
/// `y = Σ_k A_k Re(e^{iφ_k} conj(Ω̃_c(ω_k)))`.
pub struct SpectralIntegrator;

impl Integrator for SpectralIntegrator {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn prepare<'a>(
        &self,
        model: &'a NoiseModel,
        seq: &ControlSequence,
        _tau_min: f64,
    ) -> Result<Box<dyn Fn(u64) -> f64 + Send + Sync + 'a>> {
        let segments = seq.segments();
        let weighted: Vec<Complex64> = model
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * fourier_of_segments(&segments, model.grid.omega(k)).conj())
            .collect();
        Ok(Box::new(move |draw| {
            let phases = model.phases(draw);
            weighted
                .iter()
                .zip(&phases)
                .map(|(c, p)| {
                    let (s, co) = p.sin_cos();
                    co * c.re - s * c.im
                })
                .sum()
        }))
    }
}

/// Trapezoid rule in time on a grid aligned with the flips.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrapezoidIntegrator {
    /// Time step; `None` uses `min(τ_min/50, π/(5 ω_max))`.
    pub dt: Option<f64>,
}

impl TrapezoidIntegrator {
    pub fn step(&self, model: &NoiseModel, tau_min: f64) -> Result<f64> {
        let omega_max = model.grid.last();
        let nyquist = PI / omega_max;
        match self.dt {
            None => Ok((tau_min / 50.0).min(nyquist / 5.0)),
            Some(dt) if dt > 0.0 && dt < nyquist => Ok(dt),
            Some(dt) => Err(Error::GridTooCoarse(format!(
                "time step {dt:e} s violates Nyquist limit {nyquist:e} s of the synthesis grid"
            ))),
        }
    }
}

impl Integrator for TrapezoidIntegrator {
    fn name(&self) -> &'static str {
        "trapezoid"
    }

    fn prepare<'a>(
        &self,
        model: &'a NoiseModel,
        seq: &ControlSequence,
        tau_min: f64,
    ) -> Result<Box<dyn Fn(u64) -> f64 + Send + Sync + 'a>> {
        let dt = self.step(model, tau_min)?;
        let mut times = Vec::new();
        let mut weights = Vec::new();
        for seg in seq.segments() {
            let len = seg.end - seg.start;
            let steps = (len / dt).ceil().max(1.0) as usize;
            let h = len / steps as f64;
            for i in 0..=steps {
                let end = i == 0 || i == steps;
                times.push(seg.start + i as f64 * h);
                weights.push(seg.value * h * if end { 0.5 } else { 1.0 });
            }
        }
        Ok(Box::new(move |draw| {
            let omega = generate_realization(model, &times, draw);
            omega.iter().zip(&weights).map(|(o, w)| o * w).sum()
        }))
    }
}

pub fn default_integrators() -> Registry<dyn Integrator> {
    let mut reg: Registry<dyn Integrator> = Registry::new("integrator");
    reg.register("spectral", Arc::new(SpectralIntegrator));
    reg.register("trapezoid", Arc::new(TrapezoidIntegrator::default()));
    reg
}

/// `(n << 32) | r`: realization `r` of filter `n`.
pub fn draw_index(filter: usize, realization: usize) -> u64 {
    ((filter as u64) << 32) | realization as u64
}

pub fn chi_montecarlo(model: &NoiseModel, bank: &FilterBank, samples: usize) -> Result<MeasurementSet> {
    chi_montecarlo_with(model, bank, samples, &SpectralIntegrator)
}

/// Sample mean of `y²` over `samples` fresh realizations per filter.
pub fn chi_montecarlo_with(
    model: &NoiseModel,
    bank: &FilterBank,
    samples: usize,
    integrator: &dyn Integrator,
) -> Result<MeasurementSet> {
    if samples == 0 {
        return Err(Error::invalid("monte-carlo needs at least one sample per filter"));
    }
    let tau_min = bank.sequences().iter().map(|s| s.tau()).fold(f64::INFINITY, f64::min);
    let shots = bank
        .sequences()
        .iter()
        .map(|seq| integrator.prepare(model, seq, tau_min))
        .collect::<Result<Vec<_>>>()?;
    let per_sample: Vec<Vec<f64>> = shots
        .par_iter()
        .enumerate()
        .map(|(n, shot)| (0..samples).map(|r| shot(draw_index(n, r)).powi(2)).collect())
        .collect();
    let chi = per_sample.iter().map(|row| row.iter().sum::<f64>() / samples as f64).collect();
    Ok(MeasurementSet {
        mode: MeasurementMode::Montecarlo,
        seed: Some(model.seed),
        samples,
        chi,
        per_sample: Some(per_sample),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `R(u) = ∫ Ω_c(t) Ω_c(t+u) dt` for `u ≥ 0`.
fn control_autocorrelation(segments: &[crate::controls::Segment], u: f64) -> f64 {
    let mut total = 0.0;
    for a in segments {
        for b in segments {
            let lo = a.start.max(b.start - u);
            let hi = a.end.min(b.end - u);
            if hi > lo {
                total += a.value * b.value * (hi - lo);
            }
        }
    }
    total
}

/// Time-domain reference `χ = ∫∫ Ω_c(t) Ω_c(t') g(t - t') dt dt'`, reduced to
/// `2∫₀^T g(u) R(u) du` with `R` piecewise linear between endpoint
/// differences and each piece integrated by Gauss–Legendre.
pub fn chi_time_domain(sd: &SpectralDensity, seq: &ControlSequence) -> Result<f64> {
    sd.autocorrelation(0.0)?;
    let segments = seq.segments();
    let total = seq.duration();
    let mut knots: Vec<f64> = Vec::new();
    for a in &segments {
        for b in &segments {
            for d in [b.start - a.start, b.start - a.end, b.end - a.start, b.end - a.end] {
                if d > 0.0 && d < total {
                    knots.push(d);
                }
            }
        }
    }
    knots.push(0.0);
    knots.push(total);
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);
    let rule = gauss_legendre(24);
    let mut sum = 0.0;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for &(x, wt) in &rule {
            let u = mid + half * x;
            sum += wt * half * sd.autocorrelation(u)? * control_autocorrelation(&segments, u);
        }
    }
    Ok(2.0 * sum)
}
