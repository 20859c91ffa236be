//! Gauge-ball quadrature on `H^d`.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{invalid, Error, Result};
use crate::group::{heisenberg_norm, GroupDescriptor};
use crate::rng::{self, StreamRng};

/// Largest tolerated fraction of rejected (non-evaluable) samples.
pub const MAX_REJECTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMethod {
    MonteCarlo,
    TensorGrid,
}

/// Integration over the box `|x_i| <= r` (horizontal), `|t| <= r^2`, which
/// contains `B_r` because `rho < r` forces `|x_H| < r` and `|t| < r^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    pub samples: usize,
    pub seed: u64,
}

impl QuadratureSpec {
    pub const MIN_SAMPLES: usize = 1000;

    pub fn monte_carlo(samples: usize, seed: u64) -> Result<Self> {
        Self::validated(QuadratureMethod::MonteCarlo, samples, seed)
    }

    /// Midpoint rule on roughly `samples` nodes. The error bar compares
    /// against the grid with half as many nodes per axis.
    pub fn tensor_grid(samples: usize) -> Result<Self> {
        Self::validated(QuadratureMethod::TensorGrid, samples, 0)
    }

    fn validated(method: QuadratureMethod, samples: usize, seed: u64) -> Result<Self> {
        if samples < Self::MIN_SAMPLES {
            return Err(invalid(format!("need at least {} samples, got {samples}", Self::MIN_SAMPLES)));
        }
        Ok(Self { method, samples, seed })
    }

    pub fn with_samples(self, samples: usize) -> Result<Self> {
        Self::validated(self.method, samples, self.seed)
    }
}

/// A value with its one-sigma error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self { value: c * self.value, std_error: c.abs() * self.std_error }
    }

    /// `value^p` with a first-order error bar.
    pub fn powf(self, p: f64) -> Self {
        let v = self.value.powf(p);
        let dv = if self.value == 0.0 { 0.0 } else { (p * v / self.value).abs() };
        Self { value: v, std_error: dv * self.std_error }
    }

    /// Sum of independent estimates.
    pub fn plus(self, other: Estimate) -> Self {
        Self { value: self.value + other.value, std_error: self.std_error.hypot(other.std_error) }
    }

    /// Ratio of independent estimates.
    pub fn ratio(self, other: Estimate) -> Self {
        let v = self.value / other.value;
        let rel = (self.std_error / self.value).hypot(other.std_error / other.value);
        Self { value: v, std_error: (v * rel).abs() }
    }

    /// `|self - other| <= k sqrt(se_1^2 + se_2^2)`, treating the two as independent.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.std_error.hypot(other.std_error)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
    rejected: u64,
}

impl Moments {
    fn push(&mut self, v: Option<f64>) {
        self.count += 1;
        match v {
            Some(v) if v.is_finite() => {
                self.sum += v;
                self.sum_sq += v * v;
            }
            _ => self.rejected += 1,
        }
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            count: self.count + o.count,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            rejected: self.rejected + o.rejected,
        }
    }

    fn estimate(&self, volume: f64) -> Result<Estimate> {
        if self.rejected as f64 > MAX_REJECTION * self.count as f64 {
            return Err(Error::IllPosedIntegrand { rejected: self.rejected, total: self.count });
        }
        let n = (self.count - self.rejected) as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        Ok(Estimate::new(volume * mean, volume * (var / n).sqrt()))
    }
}

/// Box half-widths for `B_r`.
fn half_widths(d: usize, r: f64) -> Vec<f64> {
    let mut h = vec![r; 2 * d];
    h.push(r * r);
    h
}

fn box_volume(half: &[f64]) -> f64 {
    half.iter().map(|h| 2.0 * h).product()
}

fn sample_box(rng: &mut StreamRng, half: &[f64], x: &mut [f64]) {
    for (xi, &h) in x.iter_mut().zip(half) {
        *xi = rng::uniform(rng, -h, h);
    }
}

/// `int_{box(B_r)} f`, where `f` returns `None` on samples it cannot evaluate.
/// `key` selects the random stream, so distinct integrals get independent samples.
pub fn box_integral<F>(g: &GroupDescriptor, r: f64, quad: &QuadratureSpec, key: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let d = g.require_heisenberg()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("ball radius must be positive, got {r}")));
    }
    let half = half_widths(d, r);
    let volume = box_volume(&half);
    let moments = match quad.method {
        QuadratureMethod::MonteCarlo => {
            let parts = rng::chunked(quad.seed, key, quad.samples, |rng, range| {
                let mut m = Moments::default();
                let mut x = vec![0.0; half.len()];
                for _ in range {
                    sample_box(rng, &half, &mut x);
                    m.push(f(&x));
                }
                m
            });
            rng::tree_reduce(parts, Moments::merge).unwrap_or_default()
        }
        QuadratureMethod::TensorGrid => {
            let n = half.len();
            let k = ((quad.samples as f64).powf(1.0 / n as f64).floor() as usize).max(2);
            let fine = grid_moments(&half, k, &f);
            let coarse = grid_moments(&half, k.div_ceil(2), &f);
            let a = fine.estimate(volume)?;
            let b = coarse.estimate(volume)?;
            return Ok(Estimate::new(a.value, (a.value - b.value).abs()));
        }
    };
    moments.estimate(volume)
}

fn grid_moments<F>(half: &[f64], k: usize, f: &F) -> Moments
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let n = half.len();
    let inner = k.pow(n as u32 - 1);
    let node = |h: f64, i: usize| -h + (2 * i + 1) as f64 * h / k as f64;
    let parts: Vec<Moments> = (0..k)
        .into_par_iter()
        .map(|i0| {
            let mut m = Moments::default();
            let mut x = vec![0.0; n];
            x[0] = node(half[0], i0);
            for mut idx in 0..inner {
                for a in 1..n {
                    x[a] = node(half[a], idx % k);
                    idx /= k;
                }
                m.push(f(&x));
            }
            m
        })
        .collect();
    rng::tree_reduce(parts, Moments::merge).unwrap_or_default()
}

/// `int_{B_r} f` via [`box_integral`] with the gauge indicator.
pub fn ball_integral<F>(g: &GroupDescriptor, r: f64, quad: &QuadratureSpec, key: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let d = g.require_heisenberg()?;
    box_integral(g, r, quad, key, |x| if heisenberg_norm(d, x) < r { f(x) } else { Some(0.0) })
}

/// `|{rho < r}|`
pub fn ball_volume(g: &GroupDescriptor, r: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    ball_integral(g, r, quad, rng::key(&[0xba11, r.to_bits()]), |_| Some(1.0))
}

/// `int_{B_r} |u|^q`. Samples outside the domain of `u` are rejected and counted.
pub fn lq_norm_power(u: &ScalarField, g: &GroupDescriptor, r: f64, q: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("exponent q must be in [1, inf), got {q}")));
    }
    let key = rng::key(&[0x19, r.to_bits(), q.to_bits()]);
    ball_integral(g, r, quad, key, |x| u.in_domain(x).then(|| u.value(x).abs().powf(q)))
}

/// `(int_{B_r} |u|^q)^{1/q}`
pub fn lq_norm(u: &ScalarField, g: &GroupDescriptor, r: f64, q: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    Ok(lq_norm_power(u, g, r, q, quad)?.powf(1.0 / q))
}
