//! Closed-form radial Hessians against finite differences.

use serde::Serialize;

use super::radial::{frame_unchecked, hessian_from_frame};
use super::{horizontal_hessian_sym, FdScheme, RadialProfile, StepScaling};
use crate::error::{invalid, Result};
use crate::group::{heisenberg_norm, GroupDescriptor};
use crate::pucci::sym_eigenvalues;
use crate::rng;

/// Where sample points are drawn for [`verify_radial`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSampling {
    pub samples: usize,
    pub seed: u64,
    pub rho_range: (f64, f64),
    pub min_horizontal: f64,
    /// Radii where the profile is not smooth; points with `|rho - r| < 0.05 rho` are redrawn.
    pub avoid: Vec<f64>,
}

impl RadialSampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, rho_range: (0.1, 2.0), min_horizontal: 0.05, avoid: Vec::new() }
    }

    pub fn avoiding(mut self, radii: &[f64]) -> Self {
        self.avoid.extend_from_slice(radii);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialCheckReport {
    pub profile: String,
    pub d: usize,
    pub samples: usize,
    pub tol: f64,
    /// `max |H_fd - H_closed|_F / |H_closed|_F`
    pub max_rel_error: f64,
    /// Largest gap between the closed-form eigenvalue list and the
    /// spectrum of the FD matrix, relative to its spectral radius.
    pub max_eigen_rel_error: f64,
    pub expected_multiplicity: usize,
    /// Smallest observed multiplicity of `psi' |D rho|^2 / rho` in the FD spectrum.
    pub min_multiplicity: usize,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

pub const RADIAL_TOL: f64 = 1e-5;

pub fn verify_radial(g: &GroupDescriptor, profile: &RadialProfile, sampling: &RadialSampling, tol: f64) -> Result<RadialCheckReport> {
    let d = g.require_heisenberg()?;
    let (lo, hi) = sampling.rho_range;
    if !(lo > 0.0 && hi > lo) || sampling.samples == 0 {
        return Err(invalid("radial sampling needs 0 < rho_min < rho_max and at least one sample"));
    }
    let field = profile.to_field(d);
    let base = FdScheme::default();
    let rows = rng::per_item(sampling.seed, rng::key(&[0x4ad1a1]), sampling.samples, |r, _| -> Result<(f64, f64, usize, Vec<f64>)> {
        let x = loop {
            let rho = rng::uniform(r, lo, hi);
            let x = crate::estimates::sample_on_gauge_sphere(r, d, rho);
            let xh = x[..2 * d].iter().map(|a| a * a).sum::<f64>().sqrt();
            let rho = heisenberg_norm(d, &x);
            if xh >= sampling.min_horizontal && sampling.avoid.iter().all(|a| (rho - a).abs() >= 0.05 * rho) {
                break x;
            }
        };
        let frame = frame_unchecked(d, &x)?;
        let rho = frame.rho;
        let closed = hessian_from_frame(d, profile, &frame);
        let s = base.with_scaling(StepScaling::Graded { scale: rho });
        let fd = horizontal_hessian_sym(g, &field, &x, &s)?;
        let rel = (&fd - &closed.matrix).frobenius_norm() / closed.matrix.frobenius_norm().max(f64::MIN_POSITIVE);
        let spec = sym_eigenvalues(&fd)?;
        let radius = spec.eigenvalues.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let eig_err = spec.eigenvalues.iter().zip(&closed.eigenvalues).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / radius;
        let iso = profile.psi_prime(rho) * frame.grad_norm2 / rho;
        let mult = spec.eigenvalues.iter().filter(|v| (*v - iso).abs() <= tol * radius).count();
        Ok((rel, eig_err, mult, x))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (mut max_rel, mut max_eig, mut min_mult, mut worst) = (0.0f64, 0.0f64, usize::MAX, Vec::new());
    for (rel, eig, mult, x) in rows {
        if rel > max_rel || worst.is_empty() {
            max_rel = max_rel.max(rel);
            worst = x;
        }
        max_eig = max_eig.max(eig);
        min_mult = min_mult.min(mult);
    }
    let expected = 2 * d - 2;
    Ok(RadialCheckReport {
        profile: profile.name().to_string(),
        d,
        samples: sampling.samples,
        tol,
        max_rel_error: max_rel,
        max_eigen_rel_error: max_eig,
        expected_multiplicity: expected,
        min_multiplicity: min_mult,
        worst_point: worst,
        passed: max_rel <= tol && max_eig <= tol && min_mult >= expected,
    })
}
