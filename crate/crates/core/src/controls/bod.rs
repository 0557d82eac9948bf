//! Bandwidth-overlap design of PDD interpulse durations.
//!
//! Consecutive main lobes are placed so that the lower band edge of lobe
//! `n+1` sits at the `1-ε` fraction of the upper band of lobe `n`:
//! `(1 - 2/M)π/τ_{n+1} = (1 + 2/M - 4ε/M)π/τ_n`.

use std::f64::consts::PI;

use serde::Serialize;

use super::ControlSequence;
use crate::error::{Error, Result};

/// Relative slack allowed when comparing a band edge against the harmonic
/// cap. The 25th BOD(5) filter of the reference design (τ₁ = 5 µs, ε = 0.5,
/// M = 32) overshoots the fifth harmonic by 2·10⁻⁴.
pub const EDGE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodDesign {
    pub tau_1: f64,
    pub epsilon: f64,
    pub flips: usize,
    /// Odd harmonic of `F_1` bounding the design; `None` for an explicit count.
    pub harmonic_cap: Option<u32>,
    /// Descending interpulse durations `τ_1 > τ_2 > ...`.
    pub taus: Vec<f64>,
}

/// One row of the design table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRow {
    pub n: usize,
    pub tau_s: f64,
    pub peak_rad_s: f64,
    pub lower_edge_rad_s: f64,
    pub upper_edge_rad_s: f64,
}

/// Main-lobe band `[(1 - 2/M)π/τ, (1 + 2/M)π/τ]`.
pub fn band_edges(tau: f64, flips: usize) -> (f64, f64) {
    let rel = 2.0 / flips as f64;
    ((1.0 - rel) * PI / tau, (1.0 + rel) * PI / tau)
}

/// `A_c^{(n)} = A_c^{(1)}·τ_1/τ_n`, equalizing main-peak heights.
pub fn scaled_amplitude(tau_n: f64, tau_1: f64, amplitude_1: f64) -> f64 {
    amplitude_1 * tau_1 / tau_n
}

fn validate(tau_1: f64, epsilon: f64, flips: usize) -> Result<()> {
    if !(tau_1 > 0.0 && tau_1.is_finite()) {
        return Err(Error::invalid(format!("tau_1 must be positive, got {tau_1}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("overlap epsilon must lie in [0, 1), got {epsilon}")));
    }
    if flips < 4 || !flips.is_power_of_two() {
        return Err(Error::invalid(format!("flip count must be a power of 2 >= 4, got {flips}")));
    }
    Ok(())
}

/// Longest descending τ-list whose main lobes stay below the `harmonic_cap`-th
/// harmonic of the first filter.
pub fn design_bod(tau_1: f64, epsilon: f64, flips: usize, harmonic_cap: u32) -> Result<BodDesign> {
    validate(tau_1, epsilon, flips)?;
    if !matches!(harmonic_cap, 3 | 5) {
        return Err(Error::invalid(format!("harmonic cap must be 3 or 5, got {harmonic_cap}")));
    }
    let ratio = BodDesign::ratio_for(epsilon, flips);
    let limit = harmonic_cap as f64 * PI / tau_1 * (1.0 + EDGE_SLACK);
    let mut taus = vec![tau_1];
    loop {
        let next = taus[taus.len() - 1] * ratio;
        if band_edges(next, flips).1 > limit {
            break;
        }
        taus.push(next);
    }
    Ok(BodDesign { tau_1, epsilon, flips, harmonic_cap: Some(harmonic_cap), taus })
}

/// Fixed number of filters from the same recursion, with no stopping rule.
pub fn design_bod_with_count(tau_1: f64, epsilon: f64, flips: usize, count: usize) -> Result<BodDesign> {
    validate(tau_1, epsilon, flips)?;
    if count == 0 {
        return Err(Error::invalid("BOD filter count must be positive"));
    }
    let ratio = BodDesign::ratio_for(epsilon, flips);
    let mut taus = Vec::with_capacity(count);
    taus.push(tau_1);
    while taus.len() < count {
        taus.push(taus[taus.len() - 1] * ratio);
    }
    Ok(BodDesign { tau_1, epsilon, flips, harmonic_cap: None, taus })
}

impl BodDesign {
    /// `(M - 2)/(M + 2 - 4ε)`.
    pub fn ratio_for(epsilon: f64, flips: usize) -> f64 {
        let m = flips as f64;
        (m - 2.0) / (m + 2.0 - 4.0 * epsilon)
    }

    pub fn ratio(&self) -> f64 {
        Self::ratio_for(self.epsilon, self.flips)
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn last_tau(&self) -> f64 {
        self.taus[self.taus.len() - 1]
    }

    pub fn rows(&self) -> Vec<BandRow> {
        self.taus
            .iter()
            .enumerate()
            .map(|(i, &tau)| {
                let (lo, hi) = band_edges(tau, self.flips);
                BandRow {
                    n: i + 1,
                    tau_s: tau,
                    peak_rad_s: PI / tau,
                    lower_edge_rad_s: lo,
                    upper_edge_rad_s: hi,
                }
            })
            .collect()
    }

    /// PDD controls for the design; with `equalize`, amplitudes follow
    /// [`scaled_amplitude`] so every main peak has the same height.
    pub fn sequences(&self, amplitude_1: f64, equalize: bool) -> Result<Vec<ControlSequence>> {
        self.taus
            .iter()
            .map(|&tau| {
                let amp = if equalize { scaled_amplitude(tau, self.tau_1, amplitude_1) } else { amplitude_1 };
                ControlSequence::pdd(tau, self.flips, amp)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::filter_function_numeric;
    use crate::spectra::FrequencyGrid;
    use approx::assert_relative_eq;

    #[test]
    fn bod3_reference_design() {
        let d = design_bod(5e-6, 0.5, 32, 3).unwrap();
        assert_eq!(d.len(), 17);
        assert!((1.75e-6..=1.82e-6).contains(&d.last_tau()), "{}", d.last_tau());
    }

    #[test]
    fn bod5_reference_design() {
        let d = design_bod(5e-6, 0.5, 32, 5).unwrap();
        assert_eq!(d.len(), 25);
        assert!((1.04e-6..=1.12e-6).contains(&d.last_tau()), "{}", d.last_tau());
    }

    #[test]
    fn stopping_rule_counts_for_other_overlaps() {
        assert_eq!(design_bod(5e-6, 0.25, 32, 3).unwrap().len(), 11);
        // the recursion alone reaches only 32 filters at ε = 0.75
        assert_eq!(design_bod(5e-6, 0.75, 32, 3).unwrap().len(), 32);
    }

    #[test]
    fn ratio_and_band_edge_identity() {
        for eps in [0.0, 0.25, 0.5, 0.75] {
            let d = design_bod(5e-6, eps, 32, 5).unwrap();
            let m = 32.0;
            for w in d.taus.windows(2) {
                assert_relative_eq!(w[1] / w[0], d.ratio(), max_relative = 1e-14);
                let lhs = (1.0 - 2.0 / m) * PI / w[1];
                let rhs = (1.0 + 2.0 / m - 4.0 * eps / m) * PI / w[0];
                assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
            }
            let cap = 5.0 * PI / d.tau_1 * (1.0 + EDGE_SLACK);
            assert!(d.rows().iter().all(|r| r.upper_edge_rad_s <= cap));
        }
    }

    #[test]
    fn zero_overlap_bands_touch() {
        let d = design_bod(5e-6, 0.0, 32, 3).unwrap();
        assert_relative_eq!(d.ratio(), 30.0 / 34.0);
        for w in d.rows().windows(2) {
            assert_relative_eq!(w[0].upper_edge_rad_s, w[1].lower_edge_rad_s, max_relative = 1e-13);
        }
        let d = design_bod(5e-6, 0.0, 4, 3).unwrap();
        for w in d.rows().windows(2) {
            assert_relative_eq!(w[0].upper_edge_rad_s, w[1].lower_edge_rad_s, max_relative = 1e-13);
        }
    }

    #[test]
    fn invalid_designs_rejected() {
        assert!(design_bod(5e-6, 1.0, 32, 3).is_err());
        assert!(design_bod(5e-6, -0.1, 32, 3).is_err());
        assert!(design_bod(5e-6, 0.5, 24, 3).is_err());
        assert!(design_bod(5e-6, 0.5, 32, 4).is_err());
        assert!(design_bod(0.0, 0.5, 32, 3).is_err());
        assert!(design_bod_with_count(5e-6, 0.5, 32, 0).is_err());
    }

    #[test]
    fn explicit_count_follows_recursion() {
        let d = design_bod_with_count(5e-6, 0.75, 32, 34).unwrap();
        assert_eq!(d.len(), 34);
        assert_eq!(d.harmonic_cap, None);
        let capped = design_bod(5e-6, 0.75, 32, 3).unwrap();
        assert_eq!(&d.taus[..capped.len()], &capped.taus[..]);
    }

    #[test]
    fn scaled_amplitude_identities() {
        assert_eq!(scaled_amplitude(2.0, 2.0, 3.0), 3.0);
        assert_eq!(scaled_amplitude(1.0, 2.0, 3.0), 6.0);
    }

    #[test]
    fn equalized_peaks() {
        let d = design_bod(5e-6, 0.5, 32, 3).unwrap();
        let grid = FrequencyGrid::new(2.5e6, 1e3).unwrap();
        let peaks: Vec<f64> = d
            .sequences(1.0, true)
            .unwrap()
            .iter()
            .map(|s| filter_function_numeric(s, &grid).into_iter().fold(0.0, f64::max))
            .collect();
        let hi = peaks.iter().copied().fold(0.0, f64::max);
        let lo = peaks.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo - 1.0 < 0.02, "{peaks:?}");
    }
}
