//! Reconstruction quality scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityConvention {
    /// `∫SŜ / √(∫S² ∫Ŝ²)`.
    #[default]
    Cosine,
    /// `∫SŜ / (∫S ∫Ŝ)`; carries units and is kept for comparison only.
    Literal,
}

impl fmt::Display for FidelityConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityConvention::Cosine => "cosine",
            FidelityConvention::Literal => "literal",
        })
    }
}

impl FromStr for FidelityConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cosine" => Ok(FidelityConvention::Cosine),
            "literal" => Ok(FidelityConvention::Literal),
            other => Err(Error::config(format!("unknown fidelity convention {other:?}"))),
        }
    }
}

fn check(s_true: &[f64], s_hat: &[f64], grid: &FrequencyGrid) -> Result<Vec<f64>> {
    if s_true.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: s_true.len() });
    }
    if s_hat.len() != s_true.len() {
        return Err(Error::LengthMismatch { expected: s_true.len(), actual: s_hat.len() });
    }
    Ok(grid.weights(true))
}

fn integral(w: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    w.iter().enumerate().map(|(k, wk)| wk * f(k)).sum()
}

/// Two-sided quadrature of `(S - Ŝ)²`.
pub fn mse(s_true: &[f64], s_hat: &[f64], grid: &FrequencyGrid) -> Result<f64> {
    let w = check(s_true, s_hat, grid)?;
    Ok(integral(&w, |k| (s_true[k] - s_hat[k]).powi(2)))
}

pub fn fidelity(s_true: &[f64], s_hat: &[f64], grid: &FrequencyGrid, conv: FidelityConvention) -> Result<f64> {
    let w = check(s_true, s_hat, grid)?;
    if s_true.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("fidelity undefined for an identically zero true spectrum"));
    }
    if s_hat.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let cross = integral(&w, |k| s_true[k] * s_hat[k]);
    let value = match conv {
        FidelityConvention::Cosine => {
            let a = integral(&w, |k| s_true[k] * s_true[k]);
            let b = integral(&w, |k| s_hat[k] * s_hat[k]);
            (cross / (a.sqrt() * b.sqrt())).clamp(-1.0, 1.0)
        }
        FidelityConvention::Literal => {
            let a = integral(&w, |k| s_true[k]);
            let b = integral(&w, |k| s_hat[k]);
            cross / (a * b)
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{khz, SpectralDensity};
    use proptest::prelude::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(khz(1000.0), 500.0).unwrap()
    }

    fn gaussian(nu: f64) -> Vec<f64> {
        SpectralDensity::single_gaussian(1e8, nu, khz(30.0)).unwrap().sample(&grid())
    }

    #[test]
    fn mse_basics() {
        let g = grid();
        let s = gaussian(khz(300.0));
        assert_eq!(mse(&s, &s, &g).unwrap(), 0.0);
        let zero = vec![0.0; s.len()];
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        let expected = 2.0 * crate::spectra::integrate_on_grid(&sq, &g, false).unwrap();
        assert!((mse(&s, &zero, &g).unwrap() / expected - 1.0).abs() < 1e-12);
        assert!(mse(&s, &s[1..], &g).is_err());
    }

    #[test]
    fn mse_of_shifted_gaussian() {
        // ‖S - Ŝ‖² / ‖S‖² = 2(1 - e^{-d²/4σ²}) for equal Gaussians a distance d apart
        let g = grid();
        let s = gaussian(khz(300.0));
        let shifted = gaussian(khz(330.0));
        let zero = vec![0.0; s.len()];
        let ratio = mse(&s, &shifted, &g).unwrap() / mse(&s, &zero, &g).unwrap();
        let expected = 2.0 * (1.0 - (-0.25f64).exp());
        assert!((ratio / expected - 1.0).abs() < 0.01, "{ratio} vs {expected}");
    }

    #[test]
    fn fidelity_examples() {
        let g = grid();
        let s = gaussian(khz(300.0));
        let scaled: Vec<f64> = s.iter().map(|v| 3.7 * v).collect();
        assert!((fidelity(&s, &scaled, &g, FidelityConvention::Cosine).unwrap() - 1.0).abs() < 1e-12);

        let far = gaussian(khz(800.0));
        let f = fidelity(&s, &far, &g, FidelityConvention::Cosine).unwrap();
        assert!(f < 1e-12, "{f}");

        // ⟨S, Ŝ⟩/‖S‖‖Ŝ‖ = e^{-d²/4σ²}, here d = 2σ
        let two_sigma = gaussian(khz(360.0));
        let f = fidelity(&s, &two_sigma, &g, FidelityConvention::Cosine).unwrap();
        assert!((f / (-1.0f64).exp() - 1.0).abs() < 0.01, "{f}");

        let zero = vec![0.0; s.len()];
        assert_eq!(fidelity(&s, &zero, &g, FidelityConvention::Cosine).unwrap(), 0.0);
        assert!(fidelity(&zero, &s, &g, FidelityConvention::Cosine).is_err());
    }

    #[test]
    fn literal_convention_is_unnormalized() {
        let g = grid();
        let s = gaussian(khz(300.0));
        let a = fidelity(&s, &s, &g, FidelityConvention::Literal).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let b = fidelity(&s, &scaled, &g, FidelityConvention::Literal).unwrap();
        assert!((a / b - 1.0).abs() < 1e-12);
        assert!(a > 0.0 && a != 1.0);
        assert_eq!("literal".parse::<FidelityConvention>().unwrap(), FidelityConvention::Literal);
        assert!("l2".parse::<FidelityConvention>().is_err());
    }

    proptest! {
        #[test]
        fn cosine_properties(
            a in proptest::collection::vec(0.0f64..1.0, 64),
            b in proptest::collection::vec(0.0f64..1.0, 64),
            c in 1e-3f64..1e3,
        ) {
            let g = FrequencyGrid::new(63.0, 1.0).unwrap();
            prop_assume!(a.iter().any(|&v| v > 0.0) && b.iter().any(|&v| v > 0.0));
            let f = fidelity(&a, &b, &g, FidelityConvention::Cosine).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            let r = fidelity(&b, &a, &g, FidelityConvention::Cosine).unwrap();
            prop_assert!((f - r).abs() <= 1e-12);
            let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
            let s = fidelity(&a, &cb, &g, FidelityConvention::Cosine).unwrap();
            prop_assert!((f - s).abs() <= 1e-12);
            prop_assert!(mse(&a, &b, &g).unwrap() >= 0.0);
            prop_assert!((fidelity(&a, &a, &g, FidelityConvention::Cosine).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}
