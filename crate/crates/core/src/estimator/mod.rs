//! Spectrum reconstruction from overlap data `χ`.
//!
//! Every solver returns `Ŝ(ω) = Σ a_n F_n(ω)` for some coefficient vector
//! `a`. Least squares minimizes `aᵀGa - 2χᵀa` through the Gramian
//! eigendecomposition, optionally truncated; the non-negative variant adds
//! `a ≥ 0`; the pseudoinverse baseline solves the discretized system
//! directly for the minimum-norm spectrum.

mod ls;
mod nnls;
mod pinv;

pub use ls::{solve_ls, LeastSquares};
pub use nnls::{nnls_active_set, solve_nnls, KktCertificate, NonNegative};
pub use pinv::{solve_pinv, PseudoInverse};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controls::FilterBank;
use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::registry::Registry;

/// Eigenvalues at or below this fraction of `λ_max` count as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "variant", content = "value", rename_all = "snake_case")]
pub enum TruncationPolicy {
    #[default]
    None,
    /// Discard the `r` smallest numerically nonzero eigenvalues.
    DropSmallest(usize),
    /// Keep the largest `floor(f·N)` eigenvalues.
    KeepFraction(f64),
    /// Keep eigenvalues above `rel·λ_max`.
    Threshold(f64),
}

impl TruncationPolicy {
    /// Number of leading eigenpairs kept for a Gramian of size `n` with
    /// numerical rank `rank`.
    pub fn retained(&self, n: usize, rank: usize, eigenvalues: &[f64]) -> Result<usize> {
        let kept = match *self {
            TruncationPolicy::None => rank,
            TruncationPolicy::DropSmallest(r) => {
                if r >= rank {
                    return Err(Error::invalid(format!(
                        "cannot drop {r} eigenvalues from a Gramian of numerical rank {rank}"
                    )));
                }
                rank - r
            }
            TruncationPolicy::KeepFraction(f) => {
                if !(f > 0.0 && f <= 1.0) || f * (n as f64) < 1.0 {
                    return Err(Error::invalid(format!("keep fraction {f} invalid for N = {n}")));
                }
                ((f * n as f64).floor() as usize).min(rank)
            }
            TruncationPolicy::Threshold(rel) => {
                if !(rel > 0.0 && rel < 1.0) {
                    return Err(Error::invalid(format!("threshold {rel} must lie in (0, 1)")));
                }
                let cut = rel * eigenvalues[0];
                eigenvalues.iter().take(rank).filter(|&&l| l > cut).count()
            }
        };
        Ok(kept)
    }
}

impl fmt::Display for TruncationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruncationPolicy::None => write!(f, "none"),
            TruncationPolicy::DropSmallest(r) => write!(f, "drop_smallest({r})"),
            TruncationPolicy::KeepFraction(x) => write!(f, "keep_fraction({x})"),
            TruncationPolicy::Threshold(x) => write!(f, "threshold({x})"),
        }
    }
}

impl FromStr for TruncationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(TruncationPolicy::None);
        }
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|body| body.split_once('('))
            .ok_or_else(|| Error::config(format!("bad truncation policy {s:?}")))?;
        let bad = || Error::config(format!("bad argument in truncation policy {s:?}"));
        match name.trim() {
            "drop_smallest" => Ok(TruncationPolicy::DropSmallest(arg.trim().parse().map_err(|_| bad())?)),
            "keep_fraction" => Ok(TruncationPolicy::KeepFraction(arg.trim().parse().map_err(|_| bad())?)),
            "threshold" => Ok(TruncationPolicy::Threshold(arg.trim().parse().map_err(|_| bad())?)),
            other => Err(Error::config(format!("unknown truncation policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Ls,
    Nnls,
    Pinv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ls => "LS",
            Method::Nnls => "NNLS",
            Method::Pinv => "PINV",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult {
    pub coefficients: Vec<f64>,
    /// `Ŝ(ω_k)` on the bank grid.
    pub spectrum_hat: Vec<f64>,
    /// Gramian eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub effective_rank: usize,
    pub method: Method,
    pub clipped: bool,
    pub kkt: Option<KktCertificate>,
}

impl EstimationResult {
    /// `aᵀGa - 2χᵀa` with the full Gramian.
    pub fn objective(&self, bank: &FilterBank, chi: &[f64]) -> f64 {
        quadratic_objective(bank.gramian(), chi, &self.coefficients)
    }

    pub fn min_sample(&self) -> f64 {
        self.spectrum_hat.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn quadratic_objective(g: &nalgebra::DMatrix<f64>, chi: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        let gi: f64 = (0..n).map(|j| g[(i, j)] * a[j]).sum();
        total += a[i] * gi - 2.0 * chi[i] * a[i];
    }
    total
}

/// Zeroes negative samples of `Ŝ`; coefficients are left untouched.
pub fn clip_negative(mut result: EstimationResult) -> EstimationResult {
    for v in &mut result.spectrum_hat {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    result.clipped = true;
    result
}

/// Retained eigenpairs of the Gramian under a policy.
pub(crate) struct Truncated<'a> {
    pub eigen: &'a SymmetricEigen,
    pub kept: usize,
}

pub(crate) fn truncate<'a>(bank: &'a FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<Truncated<'a>> {
    if chi.len() != bank.len() {
        return Err(Error::LengthMismatch { expected: bank.len(), actual: chi.len() });
    }
    let eigen = bank.eigen();
    let lambda_max = eigen.lambda_max();
    let rank = if lambda_max > 0.0 { eigen.rank(SINGULAR_THRESHOLD) } else { 0 };
    if rank == 0 {
        return Err(Error::SingularGramian { threshold: SINGULAR_THRESHOLD * lambda_max, lambda_max });
    }
    let kept = policy.retained(bank.len(), rank, &eigen.values)?;
    if kept == 0 {
        return Err(Error::SingularGramian { threshold: SINGULAR_THRESHOLD * lambda_max, lambda_max });
    }
    Ok(Truncated { eigen, kept })
}

/// A reconstruction strategy selectable by name.
pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn method(&self) -> Method;

    fn estimate(&self, bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult>;
}

/// Registry preloaded with `ls`, `nnls` and `pinv`.
pub fn default_estimators() -> Registry<dyn Estimator> {
    let mut reg: Registry<dyn Estimator> = Registry::new("estimator");
    reg.register("ls", Arc::new(LeastSquares));
    reg.register("nnls", Arc::new(NonNegative));
    reg.register("pinv", Arc::new(PseudoInverse));
    reg
}
