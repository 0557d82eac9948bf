use nalgebra::{DMatrix, DVector};

use super::{EstimationResult, Estimator, Method, TruncationPolicy, SINGULAR_THRESHOLD};
use crate::controls::FilterBank;
use crate::error::{Error, Result};

/// Minimum-norm solution of the discretized system `χ = F W S` through the
/// SVD of `A = F W^{1/2}`, without forming the Gramian.
///
/// Singular values `s_k` are truncated with the same policy as the Gramian
/// eigenvalues `λ_k = s_k²`.
pub fn solve_pinv(bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
    let n = bank.len();
    if chi.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: chi.len() });
    }
    let k = bank.grid().len();
    let sqrt_w: Vec<f64> = bank.weights().iter().map(|w| w.sqrt()).collect();
    // Aᵀ is K×N, tall, which keeps the thin SVD cheap
    let at = DMatrix::from_fn(k, n, |i, j| bank.filter(j)[i] * sqrt_w[i]);
    let svd = at.svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let u = svd.u.as_ref().expect("requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let lambda_max = eigenvalues[0];
    let rank = eigenvalues.iter().filter(|&&l| l > SINGULAR_THRESHOLD * lambda_max).count();
    if lambda_max <= 0.0 || rank == 0 {
        return Err(Error::SingularGramian { threshold: SINGULAR_THRESHOLD * lambda_max, lambda_max });
    }
    let kept = policy.retained(n, rank, &eigenvalues)?;

    let chiv = DVector::from_column_slice(chi);
    let mut coefficients = vec![0.0; n];
    let mut x = DVector::<f64>::zeros(k);
    for &i in order.iter().take(kept) {
        let s = svd.singular_values[i];
        // left vector of A is the right vector of Aᵀ
        let left = v_t.row(i).transpose();
        let proj = left.dot(&chiv);
        for (c, l) in coefficients.iter_mut().zip(left.iter()) {
            *c += l * proj / (s * s);
        }
        x.axpy(proj / s, &u.column(i), 1.0);
    }
    let spectrum_hat = x
        .iter()
        .zip(&sqrt_w)
        .map(|(xi, sw)| if *sw > 0.0 { xi / sw } else { 0.0 })
        .collect();
    Ok(EstimationResult {
        coefficients,
        spectrum_hat,
        eigenvalues,
        effective_rank: kept,
        method: Method::Pinv,
        clipped: false,
        kkt: None,
    })
}

pub struct PseudoInverse;

impl Estimator for PseudoInverse {
    fn name(&self) -> &'static str {
        "pinv"
    }

    fn method(&self) -> Method {
        Method::Pinv
    }

    fn estimate(&self, bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
        solve_pinv(bank, chi, policy)
    }
}
