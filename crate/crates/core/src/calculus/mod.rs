//! Horizontal derivatives of scalar fields.
//!
//! All dependence on the frame goes through the exact polynomial `sigma` and
//! its exact Jacobian; finite differences are only ever taken of Euclidean
//! partials of `u`, never nested through the fields.

mod field;
mod oracle;
pub(crate) mod radial;

pub use field::ScalarField;
pub use oracle::{verify_radial, RadialCheckReport, RadialSampling, RADIAL_TOL};
pub use radial::{radial_frame, radial_hessian, HeisenbergRadialFrame, RadialHessian, RadialProfile};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::GroupDescriptor;
use crate::pucci::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    fn power(self) -> i32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }
}

/// How the per-coordinate step is derived from `base_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepScaling {
    /// `h * max(1, |x|_inf)` on every coordinate.
    Magnitude,
    /// `h` on every coordinate.
    Fixed,
    /// `h * scale^{w_i}`, matching the dilation weight of each coordinate.
    Graded { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdScheme {
    base_step: f64,
    order: FdOrder,
    richardson: bool,
    scaling: StepScaling,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self { base_step: 1e-3, order: FdOrder::Fourth, richardson: true, scaling: StepScaling::Magnitude }
    }
}

impl FdScheme {
    pub fn new(base_step: f64, order: FdOrder, richardson: bool) -> Result<Self> {
        if !(base_step > 0.0 && base_step.is_finite()) {
            return Err(invalid(format!("finite-difference step must be positive, got {base_step}")));
        }
        Ok(Self { base_step, order, richardson, scaling: StepScaling::Magnitude })
    }

    pub fn with_scaling(mut self, scaling: StepScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn base_step(&self) -> f64 {
        self.base_step
    }

    pub fn order(&self) -> FdOrder {
        self.order
    }

    pub fn richardson(&self) -> bool {
        self.richardson
    }

    fn steps(&self, x: &[f64], weights: &[u32]) -> Vec<f64> {
        match self.scaling {
            StepScaling::Magnitude => {
                let mag = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                vec![self.base_step * mag; x.len()]
            }
            StepScaling::Fixed => vec![self.base_step; x.len()],
            StepScaling::Graded { scale } => weights
                .iter()
                .map(|&w| self.base_step * scale.powi(w as i32))
                .collect(),
        }
    }
}

const D1_4: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const D1_2: [(f64, f64); 2] = [(-1.0, -1.0), (1.0, 1.0)];

fn first_stencil(order: FdOrder) -> (&'static [(f64, f64)], f64) {
    match order {
        FdOrder::Second => (&D1_2, 2.0),
        FdOrder::Fourth => (&D1_4, 12.0),
    }
}

fn fd_gradient_raw(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: &[f64], order: FdOrder) -> Vec<f64> {
    let (stencil, denom) = first_stencil(order);
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            let mut s = 0.0;
            for &(a, c) in stencil {
                y[k] = x[k] + a * h[k];
                s += c * f(&y);
            }
            y[k] = x[k];
            s / (denom * h[k])
        })
        .collect()
}

fn fd_hessian_raw(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: &[f64], order: FdOrder) -> Vec<f64> {
    let n = x.len();
    let (stencil, denom) = first_stencil(order);
    let f0 = f(x);
    let mut y = x.to_vec();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let diag = match order {
            FdOrder::Second => {
                let mut s = -2.0 * f0;
                for a in [-1.0, 1.0] {
                    y[i] = x[i] + a * h[i];
                    s += f(&y);
                }
                s / (h[i] * h[i])
            }
            FdOrder::Fourth => {
                let mut s = -30.0 * f0;
                for (a, c) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
                    y[i] = x[i] + a * h[i];
                    s += c * f(&y);
                }
                s / (12.0 * h[i] * h[i])
            }
        };
        y[i] = x[i];
        out[i * n + i] = diag;
        for j in i + 1..n {
            let mut s = 0.0;
            for &(a, ca) in stencil {
                y[i] = x[i] + a * h[i];
                for &(b, cb) in stencil {
                    y[j] = x[j] + b * h[j];
                    s += ca * cb * f(&y);
                }
                y[j] = x[j];
            }
            y[i] = x[i];
            let v = s / (denom * denom * h[i] * h[j]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

fn richardson(
    raw: impl Fn(&[f64]) -> Vec<f64>,
    h: &[f64],
    scheme: &FdScheme,
) -> Vec<f64> {
    let coarse = raw(h);
    if !scheme.richardson {
        return coarse;
    }
    let half: Vec<f64> = h.iter().map(|v| 0.5 * v).collect();
    let fine = raw(&half);
    let k = 2f64.powi(scheme.order.power());
    fine.iter().zip(&coarse).map(|(f, c)| (k * f - c) / (k - 1.0)).collect()
}

/// Euclidean gradient by central differences.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], weights: &[u32], scheme: &FdScheme) -> Vec<f64> {
    let h = scheme.steps(x, weights);
    richardson(|h| fd_gradient_raw(f, x, h, scheme.order), &h, scheme)
}

/// Euclidean Hessian by central differences, row-major `n x n`.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], weights: &[u32], scheme: &FdScheme) -> Vec<f64> {
    let h = scheme.steps(x, weights);
    richardson(|h| fd_hessian_raw(f, x, h, scheme.order), &h, scheme)
}

fn check_point(g: &GroupDescriptor, u: &ScalarField, x: &[f64]) -> Result<()> {
    if x.len() != g.n() {
        return Err(invalid(format!("point has {} coordinates, group needs {}", x.len(), g.n())));
    }
    if !u.in_domain(x) {
        return Err(Error::Domain { field: u.name().to_string(), point: x.to_vec() });
    }
    Ok(())
}

fn euclidean_gradient(g: &GroupDescriptor, u: &ScalarField, x: &[f64], s: &FdScheme) -> Vec<f64> {
    match u.analytic_gradient(x) {
        Some(grad) => grad,
        None => fd_gradient(&|y| u.value(y), x, g.weights(), s),
    }
}

fn euclidean_hessian(g: &GroupDescriptor, u: &ScalarField, x: &[f64], s: &FdScheme) -> Vec<f64> {
    match u.analytic_hessian(x) {
        Some(h) => h,
        None => fd_hessian(&|y| u.value(y), x, g.weights(), s),
    }
}

/// `X_j u(x) = sum_k sigma_kj(x) d_k u(x)` for `j < m`.
pub fn apply_field(g: &GroupDescriptor, j: usize, u: &ScalarField, x: &[f64], s: &FdScheme) -> Result<f64> {
    if j >= g.m() {
        return Err(invalid(format!("field index {j} out of range for m = {}", g.m())));
    }
    Ok(horizontal_gradient(g, u, x, s)?[j])
}

/// `D_X u = (X_1 u, ..., X_m u)`.
pub fn horizontal_gradient(g: &GroupDescriptor, u: &ScalarField, x: &[f64], s: &FdScheme) -> Result<Vec<f64>> {
    check_point(g, u, x)?;
    let grad = euclidean_gradient(g, u, x, s);
    let (n, m) = (g.n(), g.m());
    let sigma = g.sigma(x);
    Ok((0..m).map(|j| (0..n).map(|k| sigma[k * m + j] * grad[k]).sum()).collect())
}

/// `(D^2_X u)* = (X_i X_j u + X_j X_i u) / 2`, via
/// `sigma^T D^2 u sigma + sum_{k,l} sigma_ki (d_k sigma_lj) d_l u`, symmetrized.
pub fn horizontal_hessian_sym(g: &GroupDescriptor, u: &ScalarField, x: &[f64], s: &FdScheme) -> Result<SymMatrix> {
    check_point(g, u, x)?;
    let grad = euclidean_gradient(g, u, x, s);
    let hess = euclidean_hessian(g, u, x, s);
    Ok(assemble_hessian(g, x, &grad, &hess))
}

pub(crate) fn assemble_hessian(g: &GroupDescriptor, x: &[f64], grad: &[f64], hess: &[f64]) -> SymMatrix {
    let (n, m) = (g.n(), g.m());
    let sigma = g.sigma(x);
    let jac = g.sigma_jacobian(x);
    // hs = D^2 u * sigma, n x m
    let mut hs = vec![0.0; n * m];
    for k in 0..n {
        for j in 0..m {
            hs[k * m + j] = (0..n).map(|l| hess[k * n + l] * sigma[l * m + j]).sum();
        }
    }
    // first-order term: X_i applied to the coefficients of X_j
    let mut full = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let mut v = 0.0;
            for k in 0..n {
                let ski = sigma[k * m + i];
                if ski == 0.0 {
                    continue;
                }
                v += ski * hs[k * m + j];
                let dk = &jac[k];
                for l in 0..n {
                    v += ski * dk[l * m + j] * grad[l];
                }
            }
            full[i * m + j] = v;
        }
    }
    SymMatrix::symmetrize(m, &full)
}

/// `Delta_X u = sum_i X_i^2 u`.
pub fn sublaplacian(g: &GroupDescriptor, u: &ScalarField, x: &[f64], s: &FdScheme) -> Result<f64> {
    Ok(horizontal_hessian_sym(g, u, x, s)?.trace())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallbackCheck {
    pub field: String,
    pub points: usize,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    pub passed: bool,
}

/// Cross-checks a field's analytic derivative callbacks against finite
/// differences of its values. Errors are relative to `max(1, |exact|_inf)`.
pub fn check_derivative_callbacks(
    g: &GroupDescriptor,
    u: &ScalarField,
    points: &[Vec<f64>],
    s: &FdScheme,
    tol: f64,
) -> Result<CallbackCheck> {
    let mut ge = 0.0f64;
    let mut he = 0.0f64;
    for x in points {
        check_point(g, u, x)?;
        let rel = |exact: &[f64], approx: &[f64]| {
            let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            exact.iter().zip(approx).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
        };
        if let Some(exact) = u.analytic_gradient(x) {
            ge = ge.max(rel(&exact, &fd_gradient(&|y| u.value(y), x, g.weights(), s)));
        }
        if let Some(exact) = u.analytic_hessian(x) {
            he = he.max(rel(&exact, &fd_hessian(&|y| u.value(y), x, g.weights(), s)));
        }
    }
    Ok(CallbackCheck {
        field: u.name().to_string(),
        points: points.len(),
        max_gradient_error: ge,
        max_hessian_error: he,
        passed: ge <= tol && he <= tol,
    })
}
