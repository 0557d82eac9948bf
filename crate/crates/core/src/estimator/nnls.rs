use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{truncate, EstimationResult, Estimator, Method, TruncationPolicy};
use crate::controls::FilterBank;
use crate::error::{Error, Result};

/// Relative tolerance on the KKT conditions, scaled by `‖χ‖∞`.
pub const KKT_TOLERANCE: f64 = 1e-8;

/// First-order optimality report for `a ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktCertificate {
    /// `max |∇_j|` over components with `a_j > 0`.
    pub stationarity: f64,
    /// `max(-∇_j, 0)` over components with `a_j = 0`.
    pub dual_infeasibility: f64,
    /// `max(-a_j, 0)`.
    pub primal_infeasibility: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct ActiveSetSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
}

fn solve_subset(m: &DMatrix<f64>, d: &DVector<f64>, passive: &[usize]) -> Vec<f64> {
    let sub = m.select_columns(passive);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sol = svd.solve(d, 1e-12 * smax).expect("svd computed with both factors");
    sol.iter().copied().collect()
}

/// Lawson–Hanson active-set solver for `min ‖Mx - d‖²` subject to `x ≥ 0`.
///
/// Outer iterations are capped at `10·n`; on exhaustion the best feasible
/// iterate is returned inside [`Error::NonConvergence`].
pub fn nnls_active_set(m: &DMatrix<f64>, d: &DVector<f64>) -> Result<ActiveSetSolution> {
    let n = m.ncols();
    if d.len() != m.nrows() {
        return Err(Error::LengthMismatch { expected: m.nrows(), actual: d.len() });
    }
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mtd = m.transpose() * d;
    let tol = 1e-10 * mtd.amax().max(f64::MIN_POSITIVE);
    let max_iter = 10 * n.max(1);
    let mut iterations = 0;

    loop {
        let mut w = m.transpose() * (d - m * &x);
        let mut added = None;
        loop {
            let candidate = (0..n)
                .filter(|&j| !passive[j] && w[j] > tol)
                .max_by(|&a, &b| w[a].total_cmp(&w[b]));
            let Some(j) = candidate else { break };
            if iterations >= max_iter {
                return Err(Error::NonConvergence { iterations, best: x.iter().copied().collect() });
            }
            iterations += 1;
            passive[j] = true;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let z = solve_subset(m, d, &idx);
            let pos = idx.iter().position(|&k| k == j).unwrap();
            if z[pos] <= 0.0 {
                // round-off makes the entering column useless; bar it this round
                passive[j] = false;
                w[j] = 0.0;
                continue;
            }
            added = Some((idx, z));
            break;
        }
        let Some((mut idx, mut z)) = added else { break };

        loop {
            if z.iter().all(|&v| v > 0.0) {
                for (&k, &v) in idx.iter().zip(&z) {
                    x[k] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&k, &v) in idx.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - v));
                }
            }
            for (&k, &v) in idx.iter().zip(&z) {
                x[k] += alpha * (v - x[k]);
            }
            for &k in &idx {
                if x[k] <= 1e-15 * x.amax() {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            idx = (0..n).filter(|&k| passive[k]).collect();
            if idx.is_empty() {
                break;
            }
            z = solve_subset(m, d, &idx);
        }
        for k in 0..n {
            if !passive[k] {
                x[k] = 0.0;
            }
        }
    }
    Ok(ActiveSetSolution { x: x.iter().copied().collect(), iterations })
}

fn certificate(m: &DMatrix<f64>, d: &DVector<f64>, chi: &[f64], a: &[f64], iterations: usize) -> KktCertificate {
    let av = DVector::from_column_slice(a);
    let grad = m.transpose() * (m * &av - d);
    let scale = chi.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tolerance = KKT_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    let mut stationarity = 0.0f64;
    let mut dual = 0.0f64;
    let mut primal = 0.0f64;
    for (j, &aj) in a.iter().enumerate() {
        primal = primal.max(-aj);
        if aj > 0.0 {
            stationarity = stationarity.max(grad[j].abs());
        } else {
            dual = dual.max(-grad[j]);
        }
    }
    KktCertificate {
        stationarity,
        dual_infeasibility: dual,
        primal_infeasibility: primal,
        tolerance,
        iterations,
        satisfied: stationarity <= tolerance && dual <= tolerance && primal == 0.0,
    }
}

/// `min aᵀG_R a - 2(P_Rχ)ᵀa` over `a ≥ 0`, where `G_R` and `P_R` are the
/// Gramian and projector restricted to the retained eigenspace.
pub fn solve_nnls(bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
    let t = truncate(bank, chi, policy)?;
    let n = bank.len();
    let r = t.kept;
    let chiv = DVector::from_column_slice(chi);
    let mut m = DMatrix::<f64>::zeros(r, n);
    let mut d = DVector::<f64>::zeros(r);
    for k in 0..r {
        let u = t.eigen.vectors.column(k);
        let lam = t.eigen.values[k];
        let sq = lam.sqrt();
        for j in 0..n {
            m[(k, j)] = sq * u[j];
        }
        d[k] = u.dot(&chiv) / sq;
    }
    let sol = nnls_active_set(&m, &d)?;
    let kkt = certificate(&m, &d, chi, &sol.x, sol.iterations);
    let spectrum_hat = bank.combine(&sol.x);
    Ok(EstimationResult {
        coefficients: sol.x,
        spectrum_hat,
        eigenvalues: t.eigen.values.clone(),
        effective_rank: r,
        method: Method::Nnls,
        clipped: false,
        kkt: Some(kkt),
    })
}

pub struct NonNegative;

impl Estimator for NonNegative {
    fn name(&self) -> &'static str {
        "nnls"
    }

    fn method(&self) -> Method {
        Method::Nnls
    }

    fn estimate(&self, bank: &FilterBank, chi: &[f64], policy: &TruncationPolicy) -> Result<EstimationResult> {
        solve_nnls(bank, chi, policy)
    }
}
