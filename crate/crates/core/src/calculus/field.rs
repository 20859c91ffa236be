use std::fmt;
use std::sync::Arc;

use crate::group::Polynomial;

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A real function on `R^n` with optional exact Euclidean derivatives.
///
/// The Hessian callback returns a row-major `n x n` matrix.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    value: Arc<ValueFn>,
    gradient: Option<Arc<VectorFn>>,
    hessian: Option<Arc<VectorFn>>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            domain: Arc::new(|_| true),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_domain(mut self, d: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(d);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Drops the analytic callbacks so every derivative goes through finite
    /// differences.
    pub fn without_derivatives(mut self) -> Self {
        self.gradient = None;
        self.hessian = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn analytic_hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    /// A polynomial with exact derivatives.
    pub fn polynomial(name: impl Into<String>, p: Polynomial) -> Self {
        let vars = p.num_vars();
        let grads: Vec<Polynomial> = (0..vars).map(|k| p.partial(k)).collect();
        let hess: Vec<Vec<Polynomial>> =
            grads.iter().map(|g| (0..vars).map(|l| g.partial(l)).collect()).collect();
        let grads = Arc::new(grads);
        ScalarField::new(name, move |x| p.eval(x))
            .with_gradient(move |x| {
                let mut out = vec![0.0; x.len()];
                for (k, g) in grads.iter().enumerate() {
                    out[k] = g.eval(x);
                }
                out
            })
            .with_hessian(move |x| {
                let n = x.len();
                let mut out = vec![0.0; n * n];
                for (k, row) in hess.iter().enumerate() {
                    for (l, q) in row.iter().enumerate() {
                        out[k * n + l] = q.eval(x);
                    }
                }
                out
            })
    }

    /// `x_k`
    pub fn coordinate(k: usize) -> Self {
        Self::polynomial(format!("x{}", k + 1), Polynomial::zero().plus(1.0, &[(k, 1)]))
    }

    /// `sum_k a_k x_k`
    pub fn linear(coeffs: &[f64]) -> Self {
        let p = coeffs
            .iter()
            .enumerate()
            .fold(Polynomial::zero(), |p, (k, &a)| p.plus(a, &[(k, 1)]));
        Self::polynomial("linear", p)
    }

    /// `c/2 * sum_{i<m} x_i^2`
    pub fn scaled_half_square(m: usize, c: f64) -> Self {
        let p = (0..m).fold(Polynomial::zero(), |p, i| p.plus(0.5 * c, &[(i, 2)]));
        Self::polynomial(format!("{c}/2*|x_H|^2"), p)
    }

    /// `1/2 * sum_{i<m} x_i^2`
    pub fn half_square(m: usize) -> Self {
        Self::scaled_half_square(m, 1.0).renamed("|x_H|^2/2")
    }

    /// `rho^4 = |x_H|^4 + t^2` on `H^d`.
    pub fn rho4(d: usize) -> Self {
        let m = 2 * d;
        let mut p = Polynomial::zero().plus(1.0, &[(m, 2)]);
        for i in 0..m {
            for j in 0..m {
                p = p.plus(1.0, &[(i, 2), (j, 2)]);
            }
        }
        Self::polynomial("rho^4", p)
    }

    /// Pointwise sum. Analytic derivatives survive only if both sides have them.
    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.value.clone(), other.value.clone());
        let (da, db) = (self.domain.clone(), other.domain.clone());
        let sum_vec = |p: &Option<Arc<VectorFn>>, q: &Option<Arc<VectorFn>>| -> Option<Arc<VectorFn>> {
            match (p.clone(), q.clone()) {
                (Some(p), Some(q)) => Some(Arc::new(move |x: &[f64]| {
                    p(x).into_iter().zip(q(x)).map(|(a, b)| a + b).collect()
                })),
                _ => None,
            }
        };
        ScalarField {
            name: format!("{} + {}", self.name, other.name),
            value: Arc::new(move |x| a(x) + b(x)),
            gradient: sum_vec(&self.gradient, &other.gradient),
            hessian: sum_vec(&self.hessian, &other.hessian),
            domain: Arc::new(move |x| da(x) && db(x)),
        }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        let v = self.value.clone();
        let scale_vec = |p: &Option<Arc<VectorFn>>| -> Option<Arc<VectorFn>> {
            p.clone().map(|p| -> Arc<VectorFn> { Arc::new(move |x: &[f64]| p(x).into_iter().map(|a| c * a).collect()) })
        };
        ScalarField {
            name: format!("{c}*({})", self.name),
            value: Arc::new(move |x| c * v(x)),
            gradient: scale_vec(&self.gradient),
            hessian: scale_vec(&self.hessian),
            domain: self.domain.clone(),
        }
    }
}
