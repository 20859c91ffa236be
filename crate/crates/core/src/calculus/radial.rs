//! Closed-form horizontal calculus of radial functions `psi(rho)` on `H^d`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::ScalarField;
use crate::error::{Error, Result};
use crate::group::{heisenberg_norm, horizontal_norm2, GroupDescriptor};
use crate::pucci::SymMatrix;

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;
type SmoothFn = dyn Fn(f64) -> bool + Send + Sync;

/// A radial profile `psi` with its first two derivatives.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    psi: Arc<ProfileFn>,
    psi_prime: Arc<ProfileFn>,
    psi_second: Arc<ProfileFn>,
    smooth: Arc<SmoothFn>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("name", &self.name).finish()
    }
}

impl RadialProfile {
    pub fn new(
        name: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            psi: Arc::new(psi),
            psi_prime: Arc::new(psi_prime),
            psi_second: Arc::new(psi_second),
            smooth: Arc::new(|_| true),
        }
    }

    /// Marks the radii where the profile is smooth. Derivatives requested
    /// outside this set are still returned but flagged by [`radial_hessian`].
    pub fn with_smooth_set(mut self, smooth: impl Fn(f64) -> bool + Send + Sync + 'static) -> Self {
        self.smooth = Arc::new(smooth);
        self
    }

    /// `rho^k`
    pub fn power(k: f64) -> Self {
        Self::new(
            format!("rho^{k}"),
            move |r| r.powf(k),
            move |r| k * r.powf(k - 1.0),
            move |r| k * (k - 1.0) * r.powf(k - 2.0),
        )
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c, |_| 0.0, |_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi(&self, r: f64) -> f64 {
        (self.psi)(r)
    }

    pub fn psi_prime(&self, r: f64) -> f64 {
        (self.psi_prime)(r)
    }

    pub fn psi_second(&self, r: f64) -> f64 {
        (self.psi_second)(r)
    }

    pub fn is_smooth_at(&self, r: f64) -> bool {
        (self.smooth)(r)
    }

    /// `x -> psi(rho(x))` on `H^d`, without analytic derivatives.
    pub fn to_field(&self, d: usize) -> ScalarField {
        let psi = self.psi.clone();
        let smooth = self.smooth.clone();
        ScalarField::new(format!("{}(rho)", self.name), move |x| psi(heisenberg_norm(d, x)))
            .with_domain(move |x| smooth(heisenberg_norm(d, x)))
    }
}

/// Ingredients of the horizontal calculus of `rho` at a point with `x_H != 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergRadialFrame {
    pub rho: f64,
    pub xh_norm2: f64,
    /// `|D_X rho|^2 = |x_H|^2 / rho^2`
    pub grad_norm2: f64,
    pub eta: Vec<f64>,
    /// `d x d` row-major, symmetric.
    pub b: Vec<f64>,
    /// `d x d` row-major, antisymmetric.
    pub c: Vec<f64>,
}

impl HeisenbergRadialFrame {
    /// `D_X rho = eta / rho^3`
    pub fn horizontal_gradient(&self) -> Vec<f64> {
        let r3 = self.rho.powi(3);
        self.eta.iter().map(|e| e / r3).collect()
    }

    /// Entry `(i, j)` of the block matrix `[[B, C], [-C, B]]`.
    fn block(&self, d: usize, i: usize, j: usize) -> f64 {
        match (i < d, j < d) {
            (true, true) => self.b[i * d + j],
            (true, false) => self.c[i * d + (j - d)],
            (false, true) => -self.c[(i - d) * d + j],
            (false, false) => self.b[(i - d) * d + (j - d)],
        }
    }
}

pub fn radial_frame(g: &GroupDescriptor, x: &[f64]) -> Result<HeisenbergRadialFrame> {
    let d = g.require_heisenberg()?;
    if x.len() != g.n() {
        return Err(crate::error::invalid("point dimension mismatch"));
    }
    frame_unchecked(d, x)
}

pub(crate) fn frame_unchecked(d: usize, x: &[f64]) -> Result<HeisenbergRadialFrame> {
    let xh2 = horizontal_norm2(d, x);
    if xh2 == 0.0 {
        return Err(Error::SingularPoint(x.to_vec()));
    }
    let t = x[2 * d];
    let rho = heisenberg_norm(d, x);
    let mut eta = vec![0.0; 2 * d];
    for i in 0..d {
        eta[i] = x[i] * xh2 + x[i + d] * t;
        eta[i + d] = x[i + d] * xh2 - x[i] * t;
    }
    let mut b = vec![0.0; d * d];
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            b[i * d + j] = x[i] * x[j] + x[d + i] * x[d + j];
            c[i * d + j] = x[i] * x[d + j] - x[j] * x[d + i];
        }
    }
    Ok(HeisenbergRadialFrame { rho, xh_norm2: xh2, grad_norm2: xh2 / (rho * rho), eta, b, c })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialHessian {
    pub matrix: SymMatrix,
    /// Closed-form eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// True when `rho` sits outside the profile's smooth set (e.g. exactly on
    /// a splice radius); the one-sided derivatives then come from the profile.
    pub off_smooth_set: bool,
}

/// `(D^2_X psi(rho))* = psi' |D rho|^2 / rho I + (2 psi' / rho^3) [[B, C], [-C, B]]
/// + (psi'' - 3 psi' / rho) D rho (x) D rho`, with eigenvalues
/// `psi'' |D rho|^2`, `3 psi' |D rho|^2 / rho` and `psi' |D rho|^2 / rho`
/// (multiplicity `2d - 2`).
pub fn radial_hessian(g: &GroupDescriptor, profile: &RadialProfile, x: &[f64]) -> Result<RadialHessian> {
    let frame = radial_frame(g, x)?;
    let d = g.require_heisenberg()?;
    Ok(hessian_from_frame(d, profile, &frame))
}

pub(crate) fn hessian_from_frame(d: usize, profile: &RadialProfile, frame: &HeisenbergRadialFrame) -> RadialHessian {
    let rho = frame.rho;
    let p1 = profile.psi_prime(rho);
    let p2 = profile.psi_second(rho);
    let g2 = frame.grad_norm2;
    let grad = frame.horizontal_gradient();
    let iso = p1 * g2 / rho;
    let blk = 2.0 * p1 / rho.powi(3);
    let rank1 = p2 - 3.0 * p1 / rho;
    let matrix = SymMatrix::from_fn(2 * d, |i, j| {
        let delta = if i == j { iso } else { 0.0 };
        delta + blk * frame.block(d, i, j) + rank1 * grad[i] * grad[j]
    });
    let mut eigenvalues = Vec::with_capacity(2 * d);
    eigenvalues.push(p2 * g2);
    eigenvalues.push(3.0 * p1 * g2 / rho);
    eigenvalues.extend(std::iter::repeat_n(iso, 2 * d - 2));
    eigenvalues.sort_by(f64::total_cmp);
    RadialHessian { matrix, eigenvalues, off_smooth_set: !profile.is_smooth_at(rho) }
}
