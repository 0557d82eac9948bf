//! True power spectral densities, frequency grids and trapezoid quadrature.
//!
//! All frequencies are angular (rad/s). Spectra are two-sided and even:
//! `S(-ω) = S(|ω|)`, so a Gaussian component of power `N` integrates to `N`
//! over the whole real axis.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `ω_k = k·Δω`, `k = 0..K`, with `K = ceil(ω_max/Δω) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omega_max: f64,
    delta_omega: f64,
    len: usize,
}

impl FrequencyGrid {
    pub fn new(omega_max: f64, delta_omega: f64) -> Result<Self> {
        if !(delta_omega > 0.0 && delta_omega.is_finite()) {
            return Err(Error::invalid(format!("delta_omega must be positive, got {delta_omega}")));
        }
        if !(omega_max > 0.0 && omega_max.is_finite()) {
            return Err(Error::invalid(format!("omega_max must be positive, got {omega_max}")));
        }
        // Tolerate round-off when omega_max is an exact multiple of the step.
        let steps = (omega_max / delta_omega - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { omega_max, delta_omega, len: steps + 1 })
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * self.delta_omega
    }

    /// Last sample, `≥ omega_max`.
    pub fn last(&self) -> f64 {
        self.omega(self.len - 1)
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.omega(k))
    }

    /// Trapezoid weights over `[0, last]`, doubled when `two_sided`.
    pub fn weights(&self, two_sided: bool) -> Vec<f64> {
        let scale = if two_sided { 2.0 } else { 1.0 } * self.delta_omega;
        let mut w = vec![scale; self.len];
        w[0] *= 0.5;
        w[self.len - 1] *= 0.5;
        w
    }

    pub fn index_of_nearest(&self, omega: f64) -> usize {
        let k = (omega.abs() / self.delta_omega).round() as usize;
        k.min(self.len - 1)
    }

    /// Samples of `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.values().map(f).collect()
    }
}

/// One Gaussian lobe: power `N` (Hz²), center `ν` and width `σ` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub power: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianComponent {
    pub fn new(power: f64, center: f64, width: f64) -> Result<Self> {
        for (name, v) in [("power", power), ("center", center), ("width", width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("gaussian {name} must be positive, got {v}")));
            }
        }
        Ok(Self { power, center, width })
    }

    /// Peak value `N / (2·sqrt(2πσ²))`.
    pub fn peak(&self) -> f64 {
        self.power / (2.0 * (2.0 * PI * self.width * self.width).sqrt())
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let d = omega.abs() - self.center;
        self.peak() * (-d * d / (2.0 * self.width * self.width)).exp()
    }

    /// Upper end of the support used for synthesis and coverage checks.
    pub fn support_end(&self) -> f64 {
        self.center + 6.0 * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    Gaussian { components: Vec<GaussianComponent> },
    Tabulated { omegas: Vec<f64>, values: Vec<f64> },
}

impl SpectralDensity {
    pub fn gaussian_mixture(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("gaussian mixture needs at least one component"));
        }
        Ok(SpectralDensity::Gaussian { components })
    }

    pub fn single_gaussian(power: f64, center: f64, width: f64) -> Result<Self> {
        Self::gaussian_mixture(vec![GaussianComponent::new(power, center, width)?])
    }

    /// Tabulated spectrum with linear interpolation between points.
    pub fn tabulated(omegas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::LengthMismatch { expected: omegas.len(), actual: values.len() });
        }
        if omegas.len() < 2 {
            return Err(Error::invalid("tabulated spectrum needs at least two points"));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("tabulated frequencies must be strictly increasing"));
        }
        if omegas[0] < 0.0 {
            return Err(Error::invalid("tabulated frequencies must be non-negative"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("tabulated spectrum has invalid sample {v}")));
        }
        Ok(SpectralDensity::Tabulated { omegas, values })
    }

    /// Loads a two-column CSV `omega_rad_s,psd_hz2_s` with a header row.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut omegas = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::config(format!(
                    "spectrum csv rows need 2 columns, found {}",
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad number in spectrum csv: {s:?}")))
            };
            omegas.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::tabulated(omegas, values)
    }

    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        match self {
            SpectralDensity::Gaussian { components } => {
                Ok(components.iter().map(|c| c.eval(omega)).sum())
            }
            SpectralDensity::Tabulated { omegas, values } => {
                let w = omega.abs();
                let (lo, hi) = (omegas[0], omegas[omegas.len() - 1]);
                if w < lo || w > hi {
                    return Err(Error::OutOfRange { omega, lo, hi });
                }
                let i = omegas.partition_point(|&x| x <= w).clamp(1, omegas.len() - 1);
                let (x0, x1) = (omegas[i - 1], omegas[i]);
                let t = (w - x0) / (x1 - x0);
                Ok(values[i - 1] + t * (values[i] - values[i - 1]))
            }
        }
    }

    /// Samples on a grid; tabulated spectra read as zero beyond their table.
    pub fn sample(&self, grid: &FrequencyGrid) -> Vec<f64> {
        grid.sample(|w| self.evaluate(w).unwrap_or(0.0))
    }

    /// Closed-form `g(t) = Σ (N_i/2π)·exp(-σ_i²t²/2)·cos(ν_i t)`.
    ///
    /// Exact up to the overlap of each lobe with its negative-frequency
    /// mirror, which is negligible when `ν ≫ σ`.
    pub fn autocorrelation(&self, t: f64) -> Result<f64> {
        match self {
            SpectralDensity::Gaussian { components } => Ok(components
                .iter()
                .map(|c| {
                    c.power / (2.0 * PI)
                        * (-c.width * c.width * t * t / 2.0).exp()
                        * (c.center * t).cos()
                })
                .sum()),
            SpectralDensity::Tabulated { .. } => Err(Error::Unsupported(
                "closed-form autocorrelation needs a gaussian mixture; integrate numerically".into(),
            )),
        }
    }

    /// Frequency beyond which the spectrum is negligible (`< 1e-6` of its max).
    pub fn support_end(&self) -> f64 {
        match self {
            SpectralDensity::Gaussian { components } => {
                components.iter().map(|c| c.support_end()).fold(0.0, f64::max)
            }
            SpectralDensity::Tabulated { omegas, .. } => omegas[omegas.len() - 1],
        }
    }

    /// Narrowest feature width, used for grid adequacy checks.
    pub fn min_width(&self) -> Option<f64> {
        match self {
            SpectralDensity::Gaussian { components } => {
                components.iter().map(|c| c.width).reduce(f64::min)
            }
            SpectralDensity::Tabulated { .. } => None,
        }
    }

    /// Total two-sided power `∫S dω`, exact for the parametric form.
    pub fn total_power(&self) -> Option<f64> {
        match self {
            SpectralDensity::Gaussian { components } => {
                Some(components.iter().map(|c| c.power).sum())
            }
            SpectralDensity::Tabulated { .. } => None,
        }
    }
}

/// Trapezoid quadrature over `[0, ω_max]`, doubled when `two_sided`.
pub fn integrate_on_grid(samples: &[f64], grid: &FrequencyGrid, two_sided: bool) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: samples.len() });
    }
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    let ends = 0.5 * (samples[0] + samples[samples.len() - 1]);
    let one_sided = (inner + ends) * grid.delta_omega();
    Ok(if two_sided { 2.0 * one_sided } else { one_sided })
}

/// Two-sided weighted inner product `∫ f·g dω` on the grid.
pub(crate) fn inner_product(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter().zip(b).zip(weights).map(|((x, y), w)| x * y * w).sum()
}

/// Converts an ordinary frequency in kHz to angular frequency in rad/s.
pub fn khz(f: f64) -> f64 {
    2.0 * PI * f * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_gaussian() -> SpectralDensity {
        SpectralDensity::gaussian_mixture(vec![
            GaussianComponent::new(1e8, khz(140.0), khz(30.0)).unwrap(),
            GaussianComponent::new(5e7, khz(260.0), khz(30.0)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = FrequencyGrid::new(10.0, 1.0).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.omega(0), 0.0);
        assert_eq!(g.last(), 10.0);
        let g = FrequencyGrid::new(10.5, 1.0).unwrap();
        assert_eq!(g.len(), 12);
        assert!(FrequencyGrid::new(0.0, 1.0).is_err());
        assert!(FrequencyGrid::new(1.0, -1.0).is_err());
        // K >= 2 even when the step exceeds the range
        assert_eq!(FrequencyGrid::new(1.0, 5.0).unwrap().len(), 2);
    }

    #[test]
    fn gaussian_peak_value() {
        // N/(2 sqrt(2π σ²)) with N = 1e8, σ = 2π·30 kHz
        let sd = SpectralDensity::single_gaussian(1e8, khz(100.0), khz(30.0)).unwrap();
        assert_relative_eq!(sd.evaluate(khz(100.0)).unwrap(), 105.822_726_557, max_relative = 1e-9);
    }

    #[test]
    fn two_gaussian_dominated_by_first_component() {
        let sd = two_gaussian();
        let first = 1e8 / (2.0 * (2.0 * PI).sqrt() * khz(30.0));
        let tail = 0.5 * (-(khz(120.0) * khz(120.0)) / (2.0 * khz(30.0) * khz(30.0))).exp();
        let v = sd.evaluate(khz(140.0)).unwrap();
        assert_relative_eq!(v, first * (1.0 + tail), max_relative = 1e-12);
        assert!((v / first - 1.0).abs() < 5e-3);
    }

    #[test]
    fn evenness() {
        let sd = two_gaussian();
        for w in [0.0, 1e5, 8e5, 3e6] {
            assert_eq!(sd.evaluate(w).unwrap(), sd.evaluate(-w).unwrap());
        }
    }

    #[test]
    fn tabulated_interpolates_and_rejects_out_of_range() {
        let sd = SpectralDensity::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(sd.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(sd.evaluate(-1.5).unwrap(), 3.0);
        assert_eq!(sd.evaluate(2.0).unwrap(), 4.0);
        assert!(matches!(sd.evaluate(2.5), Err(Error::OutOfRange { .. })));
        assert!(SpectralDensity::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(sd.autocorrelation(0.0).is_err());
    }

    #[test]
    fn tabulated_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "omega_rad_s,psd_hz2_s\n0,1\n10,3\n").unwrap();
        let sd = SpectralDensity::from_csv(&path).unwrap();
        assert_eq!(sd.evaluate(5.0).unwrap(), 2.0);
    }

    #[test]
    fn autocorrelation_at_zero_is_power_over_two_pi() {
        let sd = two_gaussian();
        assert_relative_eq!(sd.autocorrelation(0.0).unwrap(), 1.5e8 / (2.0 * PI), max_relative = 1e-14);
        let t = 3.7e-6;
        assert_eq!(sd.autocorrelation(t).unwrap(), sd.autocorrelation(-t).unwrap());
    }

    #[test]
    fn autocorrelation_envelope_bound() {
        let sigma = khz(30.0);
        let sd = SpectralDensity::single_gaussian(1e8, khz(200.0), sigma).unwrap();
        let g0 = sd.autocorrelation(0.0).unwrap();
        let g = sd.autocorrelation(3.0 / sigma).unwrap();
        assert!(g.abs() <= g0 * (-4.5f64).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn autocorrelation_matches_numeric_inverse_fourier() {
        // ν = 5σ; quadrature of (1/π)∫₀^∞ S(ω) cos(ωt) dω on a fine grid
        let sigma = khz(30.0);
        let sd = SpectralDensity::single_gaussian(1e8, 5.0 * sigma, sigma).unwrap();
        let grid = FrequencyGrid::new(5.0 * sigma + 12.0 * sigma, sigma / 200.0).unwrap();
        for t in [0.0, 1e-6, 4e-6, 9e-6] {
            let f: Vec<f64> = grid.values().map(|w| sd.evaluate(w).unwrap() * (w * t).cos()).collect();
            let numeric = integrate_on_grid(&f, &grid, true).unwrap() / (2.0 * PI);
            let closed = sd.autocorrelation(t).unwrap();
            let g0 = sd.autocorrelation(0.0).unwrap();
            assert!((numeric - closed).abs() <= 1e-3 * g0, "t={t}: {numeric} vs {closed}");
        }
    }

    #[test]
    fn quadrature_basics() {
        let g = FrequencyGrid::new(7.0, 0.5).unwrap();
        assert_relative_eq!(integrate_on_grid(&vec![1.0; g.len()], &g, false).unwrap(), 7.0);
        assert_relative_eq!(integrate_on_grid(&vec![1.0; g.len()], &g, true).unwrap(), 14.0);
        assert_eq!(integrate_on_grid(&vec![0.0; g.len()], &g, true).unwrap(), 0.0);
        assert!(matches!(
            integrate_on_grid(&[1.0, 2.0], &g, true),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn quadrature_recovers_gaussian_power() {
        let sigma = khz(30.0);
        let sd = SpectralDensity::single_gaussian(1e8, khz(200.0), sigma).unwrap();
        let grid = FrequencyGrid::new(khz(200.0) + 6.0 * sigma, sigma / 10.0).unwrap();
        let total = integrate_on_grid(&sd.sample(&grid), &grid, true).unwrap();
        assert!((total / 1e8 - 1.0).abs() < 1e-3, "{total}");
    }

    proptest! {
        #[test]
        fn psd_is_nonnegative(
            comps in proptest::collection::vec((1e-3f64..1e9, 1.0f64..1e7, 1.0f64..1e6), 1..4),
            omega in -1e8f64..1e8,
        ) {
            let comps = comps.into_iter()
                .map(|(n, nu, s)| GaussianComponent::new(n, nu, s).unwrap())
                .collect();
            let sd = SpectralDensity::gaussian_mixture(comps).unwrap();
            prop_assert!(sd.evaluate(omega).unwrap() >= 0.0);
        }

        #[test]
        fn mixture_quadrature_reproduces_power(
            comps in proptest::collection::vec((1e6f64..1e9, 5.0f64..20.0, 1e4f64..1e5), 1..4),
        ) {
            // centers given in units of their own width so that the mirror tail is negligible
            let comps: Vec<_> = comps.into_iter()
                .map(|(n, k, s)| GaussianComponent::new(n, k * s, s).unwrap())
                .collect();
            let sd = SpectralDensity::gaussian_mixture(comps).unwrap();
            let grid = FrequencyGrid::new(sd.support_end(), sd.min_width().unwrap() / 10.0).unwrap();
            let total = integrate_on_grid(&sd.sample(&grid), &grid, true).unwrap();
            let power = sd.total_power().unwrap();
            prop_assert!((total / power - 1.0).abs() < 1e-3);
        }
    }
}
