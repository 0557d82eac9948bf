use super::{truncate, EstimationResult, Estimator, Method, TruncationPolicy};
use crate::controls::FilterBank;
use crate::error::Result;

/// Minimum-norm minimizer of `aᵀGa - 2χᵀa` over the retained eigenspace:
/// `a = Σ_k u_k (u_kᵀχ) / λ_k`.
pub fn solve_ls(bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
    let t = truncate(bank, chi, policy)?;
    let n = bank.len();
    let mut coefficients = vec![0.0; n];
    for k in 0..t.kept {
        let u = t.eigen.vectors.column(k);
        let proj: f64 = u.iter().zip(chi).map(|(a, b)| a * b).sum();
        let scale = proj / t.eigen.values[k];
        for (c, ui) in coefficients.iter_mut().zip(u.iter()) {
            *c += scale * ui;
        }
    }
    let spectrum_hat = bank.combine(&coefficients);
    Ok(EstimationResult {
        coefficients,
        spectrum_hat,
        eigenvalues: t.eigen.values.clone(),
        effective_rank: t.kept,
        method: Method::Ls,
        clipped: false,
        kkt: None,
    })
}

pub struct LeastSquares;

impl Estimator for LeastSquares {
    fn name(&self) -> &'static str {
        "ls"
    }

    fn method(&self) -> Method {
        Method::Ls
    }

    fn estimate(&self, bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
        solve_ls(bank, chi, policy)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::controls::ControlSequence;
    use crate::error::Error;
    use crate::spectra::FrequencyGrid;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    pub(crate) fn small_bank(n: usize) -> FilterBank {
        let grid = FrequencyGrid::new(2e7, 6e3).unwrap();
        let seqs = (0..n)
            .map(|i| ControlSequence::pdd(5e-6 * 0.85f64.powi(i as i32), 32, 1.0).unwrap())
            .collect();
        FilterBank::build(seqs, grid).unwrap()
    }

    #[test]
    fn recovers_spectrum_in_filter_span() {
        let bank = small_bank(6);
        let alpha = [1.0, -0.5, 2.0, 0.25, 0.0, 1.5];
        let s = bank.combine(&alpha);
        let chi = bank.overlaps(&s).unwrap();
        let res = solve_ls(&bank, &chi, &TruncationPolicy::None).unwrap();
        for (a, b) in res.coefficients.iter().zip(alpha) {
            assert!((a - b).abs() < 1e-6, "{:?}", res.coefficients);
        }
        assert_eq!(res.effective_rank, 6);
    }

    #[test]
    fn satisfies_normal_equations() {
        let bank = small_bank(8);
        let chi: Vec<f64> = (0..8).map(|i| 1e-3 * (1.0 + i as f64).sin()).collect();
        let res = solve_ls(&bank, &chi, &TruncationPolicy::None).unwrap();
        let g = bank.gramian();
        let r = g * DVector::from_vec(res.coefficients.clone()) - DVector::from_vec(chi.clone());
        let scale = DVector::from_vec(chi).norm();
        assert!(r.norm() <= 1e-8 * scale, "{}", r.norm() / scale);
    }

    #[test]
    fn zero_data_gives_zero() {
        let bank = small_bank(4);
        let res = solve_ls(&bank, &[0.0; 4], &TruncationPolicy::None).unwrap();
        assert!(res.coefficients.iter().all(|&a| a == 0.0));
        assert!(res.spectrum_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_filter() {
        let bank = small_bank(1);
        let g = bank.gramian()[(0, 0)];
        let res = solve_ls(&bank, &[2.0 * g], &TruncationPolicy::None).unwrap();
        assert!((res.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let bank = small_bank(3);
        assert!(matches!(
            solve_ls(&bank, &[1.0, 2.0], &TruncationPolicy::None),
            Err(Error::LengthMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn truncation_reduces_rank_and_norm() {
        let bank = small_bank(8);
        let chi: Vec<f64> = (0..8).map(|i| 1e-3 * (0.3 + i as f64).cos()).collect();
        let mut prev_norm = f64::INFINITY;
        let mut prev_obj = f64::NEG_INFINITY;
        for r in 0..8 {
            let res = solve_ls(&bank, &chi, &TruncationPolicy::DropSmallest(r)).unwrap();
            assert_eq!(res.effective_rank, 8 - r);
            let norm = DVector::from_vec(res.coefficients.clone()).norm();
            let obj = res.objective(&bank, &chi);
            assert!(norm <= prev_norm * (1.0 + 1e-12));
            assert!(obj >= prev_obj - 1e-12 * obj.abs());
            prev_norm = norm;
            prev_obj = obj;
        }
    }

    #[test]
    fn identity_gramian_closed_form() {
        // with orthonormal eigenvectors and unit eigenvalues, a = χ
        let g = DMatrix::<f64>::identity(3, 3);
        let e = crate::linalg::SymmetricEigen::new(&g).unwrap();
        let chi = [0.3, -0.2, 0.7];
        let mut a = [0.0; 3];
        for k in 0..3 {
            let u = e.column(k);
            let p: f64 = u.iter().zip(&chi).map(|(x, y)| x * y).sum();
            for i in 0..3 {
                a[i] += u[i] * p / e.values[k];
            }
        }
        for (x, y) in a.iter().zip(chi) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scaling_covariance(c in 0.01f64..100.0, seed in proptest::collection::vec(-1.0f64..1.0, 5)) {
            let bank = small_bank(5);
            let chi: Vec<f64> = seed.iter().map(|v| 1e-3 * v).collect();
            let scaled: Vec<f64> = chi.iter().map(|v| c * v).collect();
            let a = solve_ls(&bank, &chi, &TruncationPolicy::None).unwrap();
            let b = solve_ls(&bank, &scaled, &TruncationPolicy::None).unwrap();
            let scale = a.coefficients.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((c * x - y).abs() <= 1e-9 * c * scale);
            }
        }
    }
}
