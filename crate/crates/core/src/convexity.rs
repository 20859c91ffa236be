//! X-lines and sampled X-(semi)convexity checks.
//!
//! Two independent checkers: second differences of `u` along sampled X-lines,
//! and the minimum eigenvalue of `(D^2_X u)*` at sampled points. Directions
//! are normalized to `|alpha| = 1` so the line constant and the eigenvalue
//! bound are the same number. Sampling can only falsify, never certify.

use serde::Serialize;

use crate::calculus::{horizontal_hessian_sym, FdScheme, ScalarField};
use crate::error::{invalid, Error, Result};
use crate::group::{GroupDescriptor, Point};
use crate::pucci::sym_eigenvalues;
use crate::rng::{self, StreamRng};

/// Absolute slack allowed on second differences and eigenvalue bounds.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Half-widths `s` probed on every sampled line.
pub const LINE_STEPS: [f64; 6] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625];

const MAX_RESAMPLES: usize = 64;
const RK4_MAX_STEP: f64 = 1e-3;

fn normalize(alpha: &[f64]) -> Result<Vec<f64>> {
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid("X-line direction must be non-zero and finite"));
    }
    Ok(alpha.iter().map(|a| a / norm).collect())
}

/// `x(t)` for `x' = sigma(x) alpha`, `x(0) = x0`, with `alpha` normalized.
///
/// On `H^d` the solution is exact: the horizontal part moves affinely and
/// `t' = 2 sum_i (alpha_i x0_{i+d} - alpha_{i+d} x0_i)` is constant. Other
/// groups use RK4 with step at most `1e-3`.
pub fn integrate_xline(g: &GroupDescriptor, x0: &[f64], alpha: &[f64], t: f64) -> Result<Point> {
    if x0.len() != g.n() || alpha.len() != g.m() {
        return Err(invalid("X-line start or direction has the wrong dimension"));
    }
    let alpha = normalize(alpha)?;
    Ok(Point::from(flow(g, x0, &alpha, t).as_slice()))
}

fn flow(g: &GroupDescriptor, x0: &[f64], alpha: &[f64], t: f64) -> Vec<f64> {
    match g.heisenberg_dim() {
        Some(d) => {
            let mut x: Vec<f64> = x0.to_vec();
            for (xi, ai) in x.iter_mut().zip(alpha) {
                *xi += t * ai;
            }
            let rate: f64 = (0..d).map(|i| alpha[i] * x0[i + d] - alpha[i + d] * x0[i]).sum();
            x[2 * d] = x0[2 * d] + 2.0 * t * rate;
            x
        }
        None => {
            let steps = ((t.abs() / RK4_MAX_STEP).ceil() as usize).max(1);
            rk4(g, x0, alpha, t, steps)
        }
    }
}

fn velocity(g: &GroupDescriptor, x: &[f64], alpha: &[f64]) -> Vec<f64> {
    let (n, m) = (g.n(), g.m());
    let sigma = g.sigma(x);
    (0..n).map(|k| (0..m).map(|j| sigma[k * m + j] * alpha[j]).sum()).collect()
}

pub(crate) fn rk4(g: &GroupDescriptor, x0: &[f64], alpha: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for _ in 0..steps {
        let k1 = velocity(g, &x, alpha);
        let k2 = velocity(g, &axpy(&x, &k1, 0.5 * h), alpha);
        let k3 = velocity(g, &axpy(&x, &k2, 0.5 * h), alpha);
        let k4 = velocity(g, &axpy(&x, &k3, h), alpha);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// A sampled X-line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XLine {
    pub start: Point,
    pub direction: Vec<f64>,
    pub span: (f64, f64),
}

impl XLine {
    pub fn new(g: &GroupDescriptor, start: Point, direction: &[f64], span: (f64, f64)) -> Result<Self> {
        if start.dim() != g.n() || direction.len() != g.m() {
            return Err(invalid("X-line start or direction has the wrong dimension"));
        }
        if !(span.0 <= 0.0 && 0.0 <= span.1) {
            return Err(invalid("X-line span must contain 0"));
        }
        Ok(Self { start, direction: normalize(direction)?, span })
    }

    pub fn at(&self, g: &GroupDescriptor, t: f64) -> Result<Point> {
        if t < self.span.0 || t > self.span.1 {
            return Err(invalid(format!("time {t} outside X-line span {:?}", self.span)));
        }
        Ok(Point::from(flow(g, self.start.coords(), &self.direction, t).as_slice()))
    }
}

pub trait PointSampler: Send + Sync {
    fn sample(&self, rng: &mut StreamRng) -> Vec<f64>;
}

/// Uniform on `{|x_H| <= r} x prod_{k >= m} [-r^{w_k}, r^{w_k}]`.
#[derive(Debug, Clone)]
pub struct HorizontalBallSampler {
    m: usize,
    weights: Vec<u32>,
    radius: f64,
}

impl HorizontalBallSampler {
    pub fn new(g: &GroupDescriptor, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("sampler radius must be positive"));
        }
        Ok(Self { m: g.m(), weights: g.weights().to_vec(), radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl PointSampler for HorizontalBallSampler {
    fn sample(&self, r: &mut StreamRng) -> Vec<f64> {
        let dir = rng::unit_vector(r, self.m);
        let len = self.radius * rng::uniform(r, 0.0, 1.0).powf(1.0 / self.m as f64);
        let mut x: Vec<f64> = dir.into_iter().map(|a| a * len).collect();
        for &w in &self.weights[self.m..] {
            let half = self.radius.powi(w as i32);
            x.push(rng::uniform(r, -half, half));
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMethod {
    Lines,
    Eigen,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Point { point: Vec<f64>, min_eigenvalue: f64 },
    Line { start: Vec<f64>, direction: Vec<f64>, s: f64, second_difference: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiconvexityReport {
    pub field: String,
    pub method: CheckMethod,
    pub constant: f64,
    pub passed: bool,
    /// Smallest margin of the tested inequality; negative iff it failed.
    pub worst_slack: f64,
    /// The sample achieving `worst_slack`.
    pub witness: Option<Witness>,
    pub samples: usize,
    pub tolerance: f64,
}

fn sample_in_domain(u: &ScalarField, sampler: &dyn PointSampler, r: &mut StreamRng) -> Result<Vec<f64>> {
    for _ in 0..MAX_RESAMPLES {
        let x = sampler.sample(r);
        if u.in_domain(&x) {
            return Ok(x);
        }
    }
    Err(Error::SamplerExhausted(MAX_RESAMPLES))
}

/// First minimum by index, so the witness does not depend on scheduling.
fn worst<T>(items: Vec<(f64, T)>) -> Option<(f64, T)> {
    items.into_iter().fold(None, |acc, (s, w)| match acc {
        Some((best, _)) if best <= s => acc,
        _ => Some((s, w)),
    })
}

/// Checks `2u(x(0)) - u(x(s)) - u(x(-s)) <= c s^2` on `lines` sampled X-lines
/// for every `s` in [`LINE_STEPS`].
pub fn check_semiconvex_lines(
    g: &GroupDescriptor,
    u: &ScalarField,
    c: f64,
    sampler: &dyn PointSampler,
    lines: usize,
    seed: u64,
) -> Result<SemiconvexityReport> {
    if lines == 0 {
        return Err(invalid("need at least one line"));
    }
    let m = g.m();
    let results = rng::per_item(seed, rng::key(&[0x11e5]), lines, |r, _| -> Result<(f64, Witness)> {
        for _ in 0..MAX_RESAMPLES {
            let x0 = sampler.sample(r);
            let alpha = rng::unit_vector(r, m);
            let mut pts = Vec::with_capacity(2 * LINE_STEPS.len());
            for &s in &LINE_STEPS {
                pts.push((s, flow(g, &x0, &alpha, s), flow(g, &x0, &alpha, -s)));
            }
            if !u.in_domain(&x0) || pts.iter().any(|(_, a, b)| !u.in_domain(a) || !u.in_domain(b)) {
                continue;
            }
            let u0 = u.value(&x0);
            let mut best: Option<(f64, Witness)> = None;
            for (s, xp, xm) in pts {
                let second = 2.0 * u0 - u.value(&xp) - u.value(&xm);
                let slack = c * s * s + CONVEXITY_TOL - second;
                if best.as_ref().is_none_or(|(b, _)| slack < *b) {
                    best = Some((
                        slack,
                        Witness::Line { start: x0.clone(), direction: alpha.clone(), s, second_difference: second },
                    ));
                }
            }
            return Ok(best.expect("LINE_STEPS is non-empty"));
        }
        Err(Error::SamplerExhausted(MAX_RESAMPLES))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (worst_slack, witness) = worst(results).expect("at least one line");
    Ok(SemiconvexityReport {
        field: u.name().to_string(),
        method: CheckMethod::Lines,
        constant: c,
        passed: worst_slack >= 0.0,
        worst_slack,
        witness: Some(witness),
        samples: lines,
        tolerance: CONVEXITY_TOL,
    })
}

/// Checks `min eig (D^2_X u)*(x) >= -c` at `points` sampled points.
pub fn check_semiconvex_eigen(
    g: &GroupDescriptor,
    u: &ScalarField,
    c: f64,
    sampler: &dyn PointSampler,
    points: usize,
    seed: u64,
    scheme: &FdScheme,
) -> Result<SemiconvexityReport> {
    if points == 0 {
        return Err(invalid("need at least one point"));
    }
    let results = rng::per_item(seed, rng::key(&[0xe16e]), points, |r, _| -> Result<(f64, Witness)> {
        let x = sample_in_domain(u, sampler, r)?;
        let h = horizontal_hessian_sym(g, u, &x, scheme)?;
        let min = sym_eigenvalues(&h)?.min();
        Ok((min + c + CONVEXITY_TOL, Witness::Point { point: x, min_eigenvalue: min }))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (worst_slack, witness) = worst(results).expect("at least one point");
    Ok(SemiconvexityReport {
        field: u.name().to_string(),
        method: CheckMethod::Eigen,
        constant: c,
        passed: worst_slack >= 0.0,
        worst_slack,
        witness: Some(witness),
        samples: points,
        tolerance: CONVEXITY_TOL,
    })
}

/// `u + (c/2) sum_{i<m} x_i^2`; X-convex iff `u` is X-semiconvex with constant `c`.
pub fn shift_by_half_square(u: &ScalarField, m: usize, c: f64) -> ScalarField {
    u.plus(&ScalarField::scaled_half_square(m, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvexityClass {
    Convex,
    SemiconvexOnly,
    Neither,
}

/// A reference function with a known convexity profile on its sampling region.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub group: GroupDescriptor,
    pub field: ScalarField,
    pub radius: f64,
    pub class: ConvexityClass,
    /// Smallest constant that makes the field semiconvex on the region.
    pub semiconvexity_constant: f64,
}

/// Six functions: three X-convex, two only semiconvex (constants 1 and 1.6),
/// one failing every constant up to 3.
pub fn standard_catalog() -> Vec<CatalogEntry> {
    use crate::group::Polynomial;
    let h1 = GroupDescriptor::heisenberg(1).expect("d >= 1");
    let h2 = GroupDescriptor::heisenberg(2).expect("d >= 1");
    let x1x3 = Polynomial::zero().plus(1.0, &[(0, 1), (2, 1)]);
    let entry = |group: &GroupDescriptor, field, radius, class, constant| CatalogEntry {
        group: group.clone(),
        field,
        radius,
        class,
        semiconvexity_constant: constant,
    };
    vec![
        entry(&h1, ScalarField::half_square(2), 1.0, ConvexityClass::Convex, 0.0),
        entry(&h1, ScalarField::rho4(1), 1.0, ConvexityClass::Convex, 0.0),
        entry(&h2, ScalarField::linear(&[1.0, -2.0, 0.0, 0.0, 0.5]), 1.0, ConvexityClass::Convex, 0.0),
        entry(&h1, ScalarField::scaled_half_square(2, -1.0), 1.0, ConvexityClass::SemiconvexOnly, 1.0),
        // min eig of [[4y, -2x], [-2x, 0]] is 2y - 2|x_H| >= -4 * 0.4
        entry(&h1, ScalarField::polynomial("x1*x3", x1x3.clone()), 0.4, ConvexityClass::SemiconvexOnly, 1.6),
        entry(
            &h1,
            ScalarField::scaled_half_square(2, -3.0).plus(&ScalarField::polynomial("x1*x3", x1x3)),
            0.4,
            ConvexityClass::Neither,
            4.6,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pucci::{pucci_plus, Ellipticity, SymMatrix};

    fn h1() -> GroupDescriptor {
        GroupDescriptor::heisenberg(1).unwrap()
    }

    #[test]
    fn xline_examples() {
        let g = h1();
        assert_eq!(integrate_xline(&g, &[0.0; 3], &[1.0, 0.0], 0.7).unwrap().coords(), &[0.7, 0.0, 0.0]);
        assert_eq!(integrate_xline(&g, &[1.0, 0.0, 0.0], &[0.0, 1.0], 0.5).unwrap().coords(), &[1.0, 0.5, -1.0]);
        let (a, b) = (0.6, 0.8);
        let p = integrate_xline(&g, &[0.0; 3], &[a, b], 2.0).unwrap();
        assert!((p.coords()[0] - 2.0 * a).abs() < 1e-15 && (p.coords()[1] - 2.0 * b).abs() < 1e-15);
        assert_eq!(p.coords()[2], 0.0);
        // unnormalized directions are normalized
        assert_eq!(integrate_xline(&g, &[0.0; 3], &[3.0, 0.0], 1.0).unwrap().coords(), &[1.0, 0.0, 0.0]);
        assert!(integrate_xline(&g, &[0.0; 3], &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn heisenberg_flow_matches_rk4() {
        let g = GroupDescriptor::heisenberg(2).unwrap();
        let x0 = [0.3, -0.2, 0.5, 0.1, 0.4];
        let alpha = normalize(&[0.2, 0.5, -0.7, 0.1]).unwrap();
        for t in [-0.6, 0.25, 1.3] {
            let exact = flow(&g, &x0, &alpha, t);
            let num = rk4(&g, &x0, &alpha, t, 1000);
            for (a, b) in exact.iter().zip(&num) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xline_satisfies_ode() {
        let g = GroupDescriptor::heisenberg(2).unwrap();
        let line = XLine::new(&g, Point::new(vec![0.3, -0.2, 0.5, 0.1, 0.4]).unwrap(), &[1.0, 2.0, -1.0, 0.5], (-1.0, 1.0)).unwrap();
        let h = 1e-5;
        let t = 0.3;
        let xp = line.at(&g, t + h).unwrap();
        let xm = line.at(&g, t - h).unwrap();
        let v = velocity(&g, line.at(&g, t).unwrap().coords(), &line.direction);
        for k in 0..5 {
            let fd = (xp.coords()[k] - xm.coords()[k]) / (2.0 * h);
            assert!((fd - v[k]).abs() < 1e-9);
        }
        assert!(line.at(&g, 2.0).is_err());
    }

    #[test]
    fn generic_step_two_group_uses_rk4() {
        use crate::group::Polynomial;
        // R^3 with X_1 = d_1, X_2 = d_2 + x_1 d_3
        let mut sigma = vec![Polynomial::zero(); 6];
        sigma[0] = Polynomial::constant(1.0);
        sigma[3] = Polynomial::constant(1.0);
        sigma[5] = Polynomial::zero().plus(1.0, &[(0, 1)]);
        let g = GroupDescriptor::carnot(vec![2, 1], sigma).unwrap();
        let (a, b) = (0.6, 0.8);
        let p = integrate_xline(&g, &[0.5, 0.0, 0.0], &[a, b], 1.5).unwrap();
        // t' = b (0.5 + a s) => t = b (0.5 T + a T^2 / 2)
        let want = b * (0.5 * 1.5 + a * 1.5 * 1.5 / 2.0);
        assert!((p.coords()[2] - want).abs() < 1e-12);
    }

    #[test]
    fn line_checker_examples() {
        let g = h1();
        let s = HorizontalBallSampler::new(&g, 1.0).unwrap();
        let u = ScalarField::half_square(2);
        assert!(check_semiconvex_lines(&g, &u, 0.0, &s, 64, 1).unwrap().passed);
        let v = ScalarField::scaled_half_square(2, -1.0);
        assert!(check_semiconvex_lines(&g, &v, 1.0, &s, 64, 1).unwrap().passed);
        let fail = check_semiconvex_lines(&g, &v, 0.5, &s, 64, 1).unwrap();
        assert!(!fail.passed);
        match fail.witness.unwrap() {
            Witness::Line { s, second_difference, .. } => assert!(second_difference > 0.5 * s * s + CONVEXITY_TOL),
            w => panic!("unexpected witness {w:?}"),
        }
        let lin = ScalarField::linear(&[0.5, -1.0, 3.0]);
        assert!(check_semiconvex_lines(&g, &lin, 0.0, &s, 64, 1).unwrap().passed);
    }

    #[test]
    fn eigen_checker_examples() {
        let g = h1();
        let fd = FdScheme::default();
        let s = HorizontalBallSampler::new(&g, 1.0).unwrap();
        let r = check_semiconvex_eigen(&g, &ScalarField::half_square(2), 0.0, &s, 32, 3, &fd).unwrap();
        assert!(r.passed);
        assert!(matches!(r.witness, Some(Witness::Point { min_eigenvalue, .. }) if (min_eigenvalue - 1.0).abs() < 1e-12));

        struct Fixed;
        impl PointSampler for Fixed {
            fn sample(&self, _: &mut StreamRng) -> Vec<f64> {
                vec![0.0, -0.5, 0.0]
            }
        }
        let xt = ScalarField::polynomial("x1x3", crate::group::Polynomial::zero().plus(1.0, &[(0, 1), (2, 1)]));
        let r = check_semiconvex_eigen(&g, &xt, 0.0, &Fixed, 4, 3, &fd).unwrap();
        assert!(!r.passed);
        assert!(matches!(r.witness, Some(Witness::Point { min_eigenvalue, .. }) if min_eigenvalue == -2.0));

        let rho4 = RadialProfile::power(4.0).to_field(1).with_domain(|x: &[f64]| x[0] * x[0] + x[1] * x[1] > 0.0);
        assert!(check_semiconvex_eigen(&g, &rho4, 0.0, &s, 64, 3, &fd).unwrap().passed);
    }

    use crate::calculus::RadialProfile;

    #[test]
    fn checkers_agree_on_catalog() {
        let fd = FdScheme::default();
        for e in standard_catalog() {
            let s = HorizontalBallSampler::new(&e.group, e.radius).unwrap();
            for c in [0.0, 0.5, 1.0, 2.0] {
                let lines = check_semiconvex_lines(&e.group, &e.field, c, &s, 400, 7).unwrap();
                let eig = check_semiconvex_eigen(&e.group, &e.field, c, &s, 400, 7, &fd).unwrap();
                assert_eq!(lines.passed, eig.passed, "{} c={c}", e.field.name());
                assert_eq!(eig.passed, c >= e.semiconvexity_constant, "{} c={c}", e.field.name());
            }
        }
    }

    #[test]
    fn shift_identity_is_exact() {
        // (D^2_X of 2C |x_H|^2)* = 4C I and M+ of it is 4 m C Lambda
        let g = GroupDescriptor::heisenberg(2).unwrap();
        let c = 0.35;
        let z = ScalarField::scaled_half_square(4, 4.0 * c);
        let h = horizontal_hessian_sym(&g, &z, &[0.3, 1.0, -2.0, 0.5, 0.7], &FdScheme::default()).unwrap();
        assert_eq!(h, SymMatrix::scaled_identity(4, 4.0 * c));
        let e = Ellipticity::new(0.5, 2.0).unwrap();
        assert!((pucci_plus(&h, &e).unwrap() - 4.0 * 4.0 * c * 2.0).abs() < 1e-14);
    }

    #[test]
    fn sampler_stays_in_region() {
        let g = GroupDescriptor::heisenberg(2).unwrap();
        let s = HorizontalBallSampler::new(&g, 0.5).unwrap();
        let mut r = rng::stream(1, 1, 1);
        for _ in 0..200 {
            let x = s.sample(&mut r);
            assert!(x[..4].iter().map(|a| a * a).sum::<f64>() <= 0.25 + 1e-15);
            assert!(x[4].abs() <= 0.25);
        }
    }
}
