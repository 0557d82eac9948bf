//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `A = U Λ Uᵀ` with eigenvalues sorted in descending order and the
/// matching eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::invalid(format!("matrix must be square, got {}x{}", n, matrix.ncols())));
        }
        if n == 0 {
            return Err(Error::invalid("matrix is empty"));
        }
        let mut a = matrix.clone();
        // symmetrize against round-off in the caller's assembly
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (a[(i, j)] + a[(j, i)]);
                a[(i, j)] = m;
                a[(j, i)] = m;
            }
        }
        let mut v = DMatrix::<f64>::identity(n, n);

        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let (app, aqq) = (a[(p, p)], a[(q, q)]);
                    if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                        continue;
                    }
                    rotated = true;
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                return Ok(Self::sorted(&a, &v));
            }
        }
        Err(Error::Unsupported(format!("jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")))
    }

    fn sorted(a: &DMatrix<f64>, v: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    /// Count of eigenvalues strictly above `rel·λ_max`.
    pub fn rank(&self, rel: f64) -> usize {
        let cut = rel * self.lambda_max();
        self.values.iter().filter(|&&l| l > cut).count()
    }

    pub fn column(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * lambda * self.vectors.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn diagonal_input() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = SymmetricEigen::new(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_non_square() {
        assert!(SymmetricEigen::new(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn known_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = SymmetricEigen::new(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn residual_and_orthogonality(n in 1usize..24, seed in proptest::collection::vec(-1.0f64..1.0, 24 * 24)) {
            let b = DMatrix::from_fn(n, n, |i, j| seed[i * 24 + j]);
            let m = &b * b.transpose();
            let e = SymmetricEigen::new(&m).unwrap();
            let scale = e.lambda_max().max(1e-300);
            prop_assert!(max_abs(&(e.reconstruct() - &m)) <= 1e-10 * scale);
            let ortho = e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n);
            prop_assert!(max_abs(&ortho) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));

            // independent route
            let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in e.values.iter().zip(&reference) {
                prop_assert!((x - y).abs() <= 1e-11 * scale);
            }
        }
    }
}
