use serde::Serialize;

use super::SymMatrix;
use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column-major: eigenvector `k` is `eigenvectors[k*m..(k+1)*m]`.
    pub eigenvectors: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let m = self.dim();
        &self.eigenvectors[k * m..(k + 1) * m]
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_spectral(&self.eigenvalues, &self.eigenvectors)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Cyclic Jacobi with row-by-row pivot order. Stops once the off-diagonal
/// Frobenius mass falls below `1e-14 * ||M||_F`.
pub fn sym_eigenvalues(matrix: &SymMatrix) -> Result<Spectrum> {
    if !matrix.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let m = matrix.dim();
    let mut a = matrix.to_dense();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let norm = matrix.frobenius_norm();
    let threshold = 1e-14 * norm;

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    s += a[i * m + j] * a[i * m + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
                // v holds eigenvectors as columns in row-major layout here
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i * m + i].total_cmp(&a[j * m + j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&k| a[k * m + k]).collect();
    let mut eigenvectors = Vec::with_capacity(m * m);
    for &k in &order {
        eigenvectors.extend((0..m).map(|i| v[i * m + k]));
    }
    Ok(Spectrum { eigenvalues, eigenvectors })
}
