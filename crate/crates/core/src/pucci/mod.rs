//! Pucci extremal operators over small symmetric matrices.

mod eigen;
mod matrix;
mod suite;

use std::sync::Arc;

use serde::Serialize;

pub use eigen::{sym_eigenvalues, Spectrum};
pub use matrix::SymMatrix;
pub use suite::{property_suite, SuiteReport, SuiteRow, SuiteSpec};

use crate::error::{invalid, Result};
use crate::rng::{self, StreamRng};

/// Ellipticity constants `0 < lambda <= Lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipticity {
    lower: f64,
    upper: f64,
}

impl Ellipticity {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(invalid(format!(
                "ellipticity requires 0 < lambda <= Lambda, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `lambda`
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `Lambda`
    pub fn upper(&self) -> f64 {
        self.upper
    }
}

/// Sums of the positive and negative eigenvalues. Eigenvalues within
/// `1e-14 * ||M||_F` of zero are dropped from both.
fn signed_sums(spectrum: &Spectrum, norm: f64) -> (f64, f64) {
    let tie = 1e-14 * norm;
    spectrum.eigenvalues.iter().fold((0.0, 0.0), |(pos, neg), &e| {
        if e > tie {
            (pos + e, neg)
        } else if e < -tie {
            (pos, neg + e)
        } else {
            (pos, neg)
        }
    })
}

/// `M+(M) = Lambda * sum_{e>0} e + lambda * sum_{e<0} e`.
pub fn pucci_plus(m: &SymMatrix, e: &Ellipticity) -> Result<f64> {
    let s = sym_eigenvalues(m)?;
    let (pos, neg) = signed_sums(&s, m.frobenius_norm());
    Ok(e.upper * pos + e.lower * neg)
}

/// `M-(M) = lambda * sum_{e>0} e + Lambda * sum_{e<0} e`.
pub fn pucci_minus(m: &SymMatrix, e: &Ellipticity) -> Result<f64> {
    let s = sym_eigenvalues(m)?;
    let (pos, neg) = signed_sums(&s, m.frobenius_norm());
    Ok(e.lower * pos + e.upper * neg)
}

/// Haar-ish orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
/// Column-major, same layout as [`Spectrum::eigenvectors`].
pub fn random_orthogonal(rng: &mut StreamRng, m: usize) -> Vec<f64> {
    let mut q: Vec<f64> = Vec::with_capacity(m * m);
    while q.len() < m * m {
        let mut v: Vec<f64> = (0..m).map(|_| rng::normal(rng)).collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for k in 0..q.len() / m {
                let col = &q[k * m..(k + 1) * m];
                let dot: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(col) {
                    *vi -= dot * ci;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.extend(v.into_iter().map(|a| a / norm));
        }
    }
    q
}

/// A random member of `{A : lambda I <= A <= Lambda I}`, built spectrally.
pub fn sample_admissible(rng: &mut StreamRng, m: usize, e: &Ellipticity) -> SymMatrix {
    let u = random_orthogonal(rng, m);
    let values: Vec<f64> = (0..m).map(|_| rng::uniform(rng, e.lower, e.upper)).collect();
    SymMatrix::from_spectral(&values, &u)
}

/// `V diag(Lambda if e_k > 0 else lambda) V^T`, the maximizer of `Tr(A M)`.
pub fn pucci_plus_optimizer(m: &SymMatrix, e: &Ellipticity) -> Result<SymMatrix> {
    let s = sym_eigenvalues(m)?;
    let values: Vec<f64> = s
        .eigenvalues
        .iter()
        .map(|&v| if v > 0.0 { e.upper } else { e.lower })
        .collect();
    Ok(SymMatrix::from_spectral(&values, &s.eigenvectors))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PucciOracleReport {
    /// Largest `Tr(A M)` over the sampled admissible matrices.
    pub oracle_sup: f64,
    pub formula_value: f64,
    /// `Tr(A* M)` for the constructed optimizer.
    pub optimizer_value: f64,
    pub samples: usize,
    /// `oracle_sup <= formula_value + 1e-10`
    pub bounded: bool,
    /// `|optimizer_value - formula_value| <= 1e-10`
    pub attained: bool,
}

pub const ORACLE_TOL: f64 = 1e-10;

/// Brute-force check of the sup characterisation of `M+`.
pub fn pucci_oracle_check(
    m: &SymMatrix,
    e: &Ellipticity,
    samples: usize,
    seed: u64,
) -> Result<PucciOracleReport> {
    if samples == 0 {
        return Err(invalid("oracle needs at least one sample"));
    }
    let formula_value = pucci_plus(m, e)?;
    let optimizer_value = pucci_plus_optimizer(m, e)?.trace_product(m);
    let dim = m.dim();
    let values = rng::per_item(seed, rng::key(&[0x9ecc1]), samples, |r, _| {
        sample_admissible(r, dim, e).trace_product(m)
    });
    let oracle_sup = values.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(PucciOracleReport {
        oracle_sup,
        formula_value,
        optimizer_value,
        samples,
        bounded: oracle_sup <= formula_value + ORACLE_TOL,
        attained: (optimizer_value - formula_value).abs() <= ORACLE_TOL,
    })
}

/// `min_{Y in {M} u samples} [M+(M - Y) + G(Y)] - G(M)`.
pub fn isaacs_gap<G>(op: G, e: &Ellipticity, m: &SymMatrix, y_samples: &[SymMatrix]) -> Result<f64>
where
    G: Fn(&SymMatrix) -> Result<f64>,
{
    let gm = op(m)?;
    let mut best = pucci_plus(&SymMatrix::zeros(m.dim()), e)? + gm;
    for y in y_samples {
        best = best.min(pucci_plus(&(m - y), e)? + op(y)?);
    }
    Ok(best - gm)
}

/// Slacks of `M-(X-Y) <= G(X) - G(Y) <= M+(X-Y)`; both are `>= 0` when the
/// sandwich holds.
pub fn subellipticity_slack<G>(op: G, e: &Ellipticity, x: &SymMatrix, y: &SymMatrix) -> Result<(f64, f64)>
where
    G: Fn(&SymMatrix) -> Result<f64>,
{
    let diff = x - y;
    let inc = op(x)? - op(y)?;
    Ok((inc - pucci_minus(&diff, e)?, pucci_plus(&diff, e)? - inc))
}

/// A second-order operator `G(x, u, D_X u, (D^2_X u)*)`.
pub trait SubellipticOperator: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, x: &[f64], value: f64, gradient: &[f64], hessian: &SymMatrix) -> Result<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct PucciMinus(pub Ellipticity);

#[derive(Debug, Clone, Copy)]
pub struct PucciPlus(pub Ellipticity);

/// `Tr(A X)` with constant coefficients.
#[derive(Debug, Clone)]
pub struct LinearTrace(pub SymMatrix);

impl SubellipticOperator for PucciMinus {
    fn name(&self) -> String {
        "pucci-minus".into()
    }
    fn eval(&self, _: &[f64], _: f64, _: &[f64], h: &SymMatrix) -> Result<f64> {
        pucci_minus(h, &self.0)
    }
}

impl SubellipticOperator for PucciPlus {
    fn name(&self) -> String {
        "pucci-plus".into()
    }
    fn eval(&self, _: &[f64], _: f64, _: &[f64], h: &SymMatrix) -> Result<f64> {
        pucci_plus(h, &self.0)
    }
}

impl SubellipticOperator for LinearTrace {
    fn name(&self) -> String {
        "linear-trace".into()
    }
    fn eval(&self, _: &[f64], _: f64, _: &[f64], h: &SymMatrix) -> Result<f64> {
        Ok(self.0.trace_product(h))
    }
}

type OperatorFn = dyn Fn(&[f64], f64, &[f64], &SymMatrix) -> Result<f64> + Send + Sync;

/// Closure-backed operator, for lower-order terms.
#[derive(Clone)]
pub struct FnOperator {
    name: String,
    f: Arc<OperatorFn>,
}

impl FnOperator {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64], f64, &[f64], &SymMatrix) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

impl SubellipticOperator for FnOperator {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn eval(&self, x: &[f64], u: f64, p: &[f64], h: &SymMatrix) -> Result<f64> {
        (self.f)(x, u, p, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ell(a: f64, b: f64) -> Ellipticity {
        Ellipticity::new(a, b).unwrap()
    }

    #[test]
    fn ellipticity_validation() {
        assert!(Ellipticity::new(0.0, 1.0).is_err());
        assert!(Ellipticity::new(2.0, 1.0).is_err());
        assert!(Ellipticity::new(1.0, f64::INFINITY).is_err());
        assert!(Ellipticity::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn pucci_examples() {
        let e = ell(1.0, 2.0);
        let i2 = SymMatrix::identity(2);
        assert_eq!(pucci_plus(&i2, &e).unwrap(), 4.0);
        assert_eq!(pucci_minus(&i2, &e).unwrap(), 2.0);
        let d = SymMatrix::diagonal(&[1.0, -1.0]);
        assert_eq!(pucci_plus(&d, &e).unwrap(), 1.0);
        assert_eq!(pucci_minus(&d, &e).unwrap(), -1.0);
        let z = SymMatrix::zeros(3);
        assert_eq!(pucci_plus(&z, &e).unwrap(), 0.0);
        assert_eq!(pucci_minus(&z, &e).unwrap(), 0.0);
    }

    #[test]
    fn oracle_examples() {
        let e = ell(1.0, 2.0);
        let d = SymMatrix::diagonal(&[1.0, -1.0]);
        let r = pucci_oracle_check(&d, &e, 200, 1).unwrap();
        assert_eq!(r.formula_value, 1.0);
        assert!(r.bounded && r.attained);
        let opt = pucci_plus_optimizer(&d, &e).unwrap();
        assert!((&opt - &SymMatrix::diagonal(&[2.0, 1.0])).frobenius_norm() < 1e-15);

        let r = pucci_oracle_check(&SymMatrix::zeros(2), &e, 50, 1).unwrap();
        assert_eq!((r.oracle_sup, r.formula_value), (0.0, 0.0));
        assert!(pucci_oracle_check(&d, &e, 0, 1).is_err());
    }

    #[test]
    fn admissible_samples_respect_bounds() {
        let e = ell(0.5, 3.0);
        let mut r = rng::stream(11, 0, 0);
        for m in 1..6 {
            let a = sample_admissible(&mut r, m, &e);
            let s = sym_eigenvalues(&a).unwrap();
            assert!(s.min() >= 0.5 - 1e-12 && s.max() <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn isaacs_examples() {
        let e = ell(1.0, 2.0);
        let m = SymMatrix::from_rows(&[vec![0.5, -1.0], vec![-1.0, 2.0]]).unwrap();
        let mut r = rng::stream(2, 0, 0);
        let ys: Vec<SymMatrix> =
            (0..20).map(|_| SymMatrix::from_fn(2, |_, _| rng::normal(&mut r))).collect();
        let gap = isaacs_gap(|y| pucci_minus(y, &e), &e, &m, &ys).unwrap();
        assert!(gap.abs() < 1e-12);

        let lam = e.lower();
        let gap = isaacs_gap(|y| Ok(lam * y.trace()), &e, &SymMatrix::identity(2), &ys).unwrap();
        assert!(gap >= -1e-10);

        assert_eq!(isaacs_gap(|y| pucci_minus(y, &e), &e, &m, &[]).unwrap(), 0.0);
    }

    #[test]
    fn operators_satisfy_sandwich() {
        let e = ell(0.7, 1.9);
        let a = SymMatrix::diagonal(&[0.7, 1.9, 1.0]);
        let lin = LinearTrace(a);
        let mut r = rng::stream(4, 0, 0);
        for _ in 0..50 {
            let x = SymMatrix::from_fn(3, |_, _| rng::normal(&mut r));
            let y = SymMatrix::from_fn(3, |_, _| rng::normal(&mut r));
            for op in [&PucciMinus(e) as &dyn SubellipticOperator, &PucciPlus(e), &lin] {
                let g = |h: &SymMatrix| op.eval(&[], 0.0, &[], h);
                let (lo, hi) = subellipticity_slack(g, &e, &x, &y).unwrap();
                assert!(lo >= -1e-10 && hi >= -1e-10, "{}", op.name());
            }
        }
    }
}
