//! Pointwise sub-Laplacian bounds for semiconvex supersolutions.
//!
//! If `(D^2_X u)* >= -4C I` and `G(x, u, D_X u, (D^2_X u)*) <= f`, then
//! `-4Cm <= Delta_X u <= (f + 4mC(Lambda - lambda) + |G(x, u, D_X u, 0)|) / lambda`.

use std::sync::Arc;

use serde::Serialize;

use crate::calculus::{horizontal_gradient, horizontal_hessian_sym, FdScheme, ScalarField};
use crate::convexity::{HorizontalBallSampler, PointSampler, CONVEXITY_TOL};
use crate::error::{invalid, Error, Result};
use crate::group::{GroupDescriptor, Polynomial};
use crate::pucci::{
    pucci_minus, sym_eigenvalues, Ellipticity, FnOperator, LinearTrace, PucciMinus, PucciPlus,
    SubellipticOperator, SymMatrix,
};
use crate::rng::{self, StreamRng};

pub const POINTWISE_TOL: f64 = 1e-8;
const MAX_RESAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        values.fold(Range { min: f64::INFINITY, max: f64::NEG_INFINITY }, |r, v| Range {
            min: r.min.min(v),
            max: r.max.max(v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precondition {
    /// `min eig (D^2_X u)* >= -4C`
    Semiconvexity,
    /// `G(x, u, D_X u, (D^2_X u)*) <= f`
    Supersolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionFailure {
    pub precondition: Precondition,
    pub point: Vec<f64>,
    /// Amount by which the precondition is violated.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub field: String,
    pub operator: String,
    pub constant: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub passed: bool,
    pub precondition_failure: Option<PreconditionFailure>,
    /// `Delta_X u` over the samples.
    pub sublaplacian: Range,
    /// The right-hand bound over the samples; the left bound is `-4Cm`.
    pub upper_bound: Range,
    pub lower_bound: f64,
    /// `Delta_X u + 4Cm`
    pub lower_margin: Range,
    /// `upper bound - Delta_X u`
    pub upper_margin: Range,
    /// `min (Delta_X u + 8Cm - max_ij |(D^2_X u)*_ij|)`
    pub entry_bound_margin: f64,
    pub witness: Option<Vec<f64>>,
}

struct Sample {
    x: Vec<f64>,
    lap: f64,
    upper: f64,
    entry_margin: f64,
    semiconvex_violation: f64,
    super_violation: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn pointwise_bound_check(
    g: &GroupDescriptor,
    op: &dyn SubellipticOperator,
    u: &ScalarField,
    f: &ScalarField,
    c: f64,
    e: &Ellipticity,
    sampler: &dyn PointSampler,
    samples: usize,
    seed: u64,
    s: &FdScheme,
) -> Result<PointwiseReport> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(invalid(format!("semiconvexity constant C must be non-negative, got {c}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let m = g.m() as f64;
    let (lam, big) = (e.lower(), e.upper());
    let zero = SymMatrix::zeros(g.m());
    let draw = |r: &mut StreamRng| -> Result<Vec<f64>> {
        for _ in 0..MAX_RESAMPLES {
            let x = sampler.sample(r);
            if u.in_domain(&x) && f.in_domain(&x) {
                return Ok(x);
            }
        }
        Err(Error::SamplerExhausted(MAX_RESAMPLES))
    };
    let rows = rng::per_item(seed, rng::key(&[0x9017]), samples, |r, _| -> Result<Sample> {
        let x = draw(r)?;
        let h = horizontal_hessian_sym(g, u, &x, s)?;
        let p = horizontal_gradient(g, u, &x, s)?;
        let v = u.value(&x);
        let fx = f.value(&x);
        let min_eig = sym_eigenvalues(&h)?.min();
        let gh = op.eval(&x, v, &p, &h)?;
        let g0 = op.eval(&x, v, &p, &zero)?;
        let lap = h.trace();
        let upper = (fx + 4.0 * m * c * (big - lam) + g0.abs()) / lam;
        Ok(Sample {
            lap,
            upper,
            entry_margin: lap + 8.0 * c * m - h.max_abs_entry(),
            semiconvex_violation: -(min_eig + 4.0 * c + CONVEXITY_TOL),
            super_violation: gh - fx - POINTWISE_TOL,
            x,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let precondition_failure = rows.iter().find_map(|r| {
        let fail = |precondition, violation| PreconditionFailure { precondition, point: r.x.clone(), violation };
        if r.semiconvex_violation > 0.0 {
            Some(fail(Precondition::Semiconvexity, r.semiconvex_violation))
        } else if r.super_violation > 0.0 {
            Some(fail(Precondition::Supersolution, r.super_violation))
        } else {
            None
        }
    });
    let lower_bound = -4.0 * c * m;
    let lower_margin = Range::of(rows.iter().map(|r| r.lap - lower_bound));
    let upper_margin = Range::of(rows.iter().map(|r| r.upper - r.lap));
    let entry_bound_margin = rows.iter().map(|r| r.entry_margin).fold(f64::INFINITY, f64::min);
    let bad = |r: &Sample| {
        r.lap - lower_bound < -POINTWISE_TOL || r.upper - r.lap < -POINTWISE_TOL || r.entry_margin < -POINTWISE_TOL
    };
    let witness = match &precondition_failure {
        Some(p) => Some(p.point.clone()),
        None => rows.iter().find(|r| bad(r)).map(|r| r.x.clone()),
    };
    Ok(PointwiseReport {
        field: u.name().to_string(),
        operator: op.name(),
        constant: c,
        samples,
        tolerance: POINTWISE_TOL,
        passed: witness.is_none(),
        precondition_failure,
        sublaplacian: Range::of(rows.iter().map(|r| r.lap)),
        upper_bound: Range::of(rows.iter().map(|r| r.upper)),
        lower_bound,
        lower_margin,
        upper_margin,
        entry_bound_margin,
        witness,
    })
}

/// A semiconvex supersolution with its operator, right-hand side and constant.
#[derive(Clone)]
pub struct PointwiseCase {
    pub name: String,
    pub group: GroupDescriptor,
    pub operator: Arc<dyn SubellipticOperator>,
    pub field: ScalarField,
    pub rhs: ScalarField,
    pub constant: f64,
    pub ellipticity: Ellipticity,
    pub radius: f64,
}

impl PointwiseCase {
    pub fn check(&self, samples: usize, seed: u64) -> Result<PointwiseReport> {
        let sampler = HorizontalBallSampler::new(&self.group, self.radius)?;
        pointwise_bound_check(
            &self.group,
            self.operator.as_ref(),
            &self.field,
            &self.rhs,
            self.constant,
            &self.ellipticity,
            &sampler,
            samples,
            seed,
            &FdScheme::default(),
        )
    }
}

/// Ellipticity shared by the reference cases.
pub fn reference_ellipticity() -> Ellipticity {
    Ellipticity::new(0.5, 2.0).expect("valid constants")
}

/// `u = -|x_H|^2/2`, `G = M-`, `f = -Lambda m`, `4C = 1`: every term equals `-m`.
pub fn tight_case(d: usize) -> Result<PointwiseCase> {
    let g = GroupDescriptor::heisenberg(d)?;
    let e = reference_ellipticity();
    let m = g.m();
    let fv = -e.upper() * m as f64;
    Ok(PointwiseCase {
        name: "tight".into(),
        operator: Arc::new(PucciMinus(e)),
        field: ScalarField::scaled_half_square(m, -1.0),
        rhs: ScalarField::new(format!("{fv}"), move |_| fv),
        constant: 0.25,
        ellipticity: e,
        radius: 1.0,
        group: g,
    })
}

/// `x -> op((D^2_X u)*(x)) + slack`, so `u` is a supersolution with margin.
fn rhs_with_slack(g: &GroupDescriptor, u: &ScalarField, op: Arc<dyn SubellipticOperator>, slack: f64) -> ScalarField {
    let (g, u) = (g.clone(), u.clone());
    ScalarField::new(format!("{} + {slack}", op.name()), move |x| {
        let s = FdScheme::default();
        let h = horizontal_hessian_sym(&g, &u, x, &s).expect("sampled point lies in the domain");
        let p = horizontal_gradient(&g, &u, x, &s).expect("sampled point lies in the domain");
        op.eval(x, u.value(x), &p, &h).expect("operator is finite") + slack
    })
}

/// Five strictly slack cases on `H^1` and `H^2`.
pub fn pointwise_catalog() -> Vec<PointwiseCase> {
    let h1 = GroupDescriptor::heisenberg(1).expect("d >= 1");
    let h2 = GroupDescriptor::heisenberg(2).expect("d >= 1");
    let e = reference_ellipticity();
    let (lam, big) = (e.lower(), e.upper());
    let case = |name: &str, g: &GroupDescriptor, op: Arc<dyn SubellipticOperator>, u, rhs, c, radius| PointwiseCase {
        name: name.into(),
        group: g.clone(),
        operator: op,
        field: u,
        rhs,
        constant: c,
        ellipticity: e,
        radius,
    };

    let quad = ScalarField::half_square(2);
    let f1 = lam * 2.0 + 0.5;
    let rho4 = ScalarField::rho4(1);
    let x1x3 = ScalarField::polynomial("x1*x3", Polynomial::zero().plus(1.0, &[(0, 1), (2, 1)]));
    let plus: Arc<dyn SubellipticOperator> = Arc::new(PucciPlus(e));
    let concave = ScalarField::scaled_half_square(4, -0.5).plus(&ScalarField::coordinate(4));
    let a = SymMatrix::diagonal(&[0.6, 1.0, 1.5, 1.9]);
    let trace: Arc<dyn SubellipticOperator> = Arc::new(LinearTrace(a));
    let mixed = ScalarField::rho4(1).scaled(0.5).plus(&ScalarField::scaled_half_square(2, -0.2));
    let gradient_term: Arc<dyn SubellipticOperator> = Arc::new(FnOperator::new("pucci-minus + 0.3 sin(X_1 u)", move |_, _, p, h| {
        Ok(pucci_minus(h, &e)? + 0.3 * p[0].sin())
    }));

    vec![
        case(
            "convex-quadratic",
            &h1,
            Arc::new(PucciMinus(e)),
            quad,
            ScalarField::new(format!("{f1}"), move |_| f1),
            0.0,
            1.0,
        ),
        case(
            "rho4",
            &h1,
            Arc::new(PucciMinus(e)),
            rho4,
            ScalarField::new("24 Lambda |x_H|^2 + 1", move |x: &[f64]| 24.0 * big * (x[0] * x[0] + x[1] * x[1]) + 1.0),
            0.1,
            1.0,
        ),
        case("x1x3", &h1, plus.clone(), x1x3.clone(), rhs_with_slack(&h1, &x1x3, plus, 0.1), 0.5, 0.4),
        case("concave-trace", &h2, trace.clone(), concave.clone(), rhs_with_slack(&h2, &concave, trace, 1.0), 0.25, 1.0),
        case(
            "gradient-term",
            &h1,
            gradient_term.clone(),
            mixed.clone(),
            rhs_with_slack(&h1, &mixed, gradient_term, 0.2),
            0.1,
            1.0,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_case_is_tight() {
        for d in [1, 2] {
            let c = tight_case(d).unwrap();
            let r = c.check(200, 1).unwrap();
            let m = (2 * d) as f64;
            assert!(r.passed, "{r:?}");
            assert!((r.lower_bound + m).abs() < 1e-15);
            for v in [r.sublaplacian.min, r.sublaplacian.max, r.upper_bound.min, r.upper_bound.max] {
                assert!((v + m).abs() < 1e-9, "{r:?}");
            }
        }
    }

    #[test]
    fn identity_hessian_is_tight_above() {
        let g = GroupDescriptor::heisenberg(1).unwrap();
        let e = reference_ellipticity();
        let f = ScalarField::new("lambda m", move |_| 2.0 * e.lower());
        let s = HorizontalBallSampler::new(&g, 1.0).unwrap();
        let r = pointwise_bound_check(&g, &PucciMinus(e), &ScalarField::half_square(2), &f, 0.0, &e, &s, 50, 2, &FdScheme::default())
            .unwrap();
        assert!(r.passed);
        assert!((r.upper_margin.max).abs() < 1e-12 && (r.lower_margin.min - 2.0).abs() < 1e-12);

        let lin = ScalarField::linear(&[1.0, -2.0, 3.0]);
        let zero = ScalarField::new("0", |_| 0.0);
        let r = pointwise_bound_check(&g, &PucciMinus(e), &lin, &zero, 0.0, &e, &s, 50, 2, &FdScheme::default()).unwrap();
        assert!(r.passed && r.sublaplacian.max.abs() < 1e-12 && r.upper_bound.max.abs() < 1e-12);
    }

    #[test]
    fn catalog_has_positive_margins() {
        for c in pointwise_catalog() {
            let r = c.check(300, 5).unwrap();
            assert!(r.passed, "{}: {r:?}", c.name);
            assert!(r.lower_margin.min > 0.0 && r.upper_margin.min > 0.0, "{}: {r:?}", c.name);
            assert!(r.entry_bound_margin >= 0.0);
        }
    }

    #[test]
    fn broken_preconditions_are_reported() {
        let mut c = tight_case(1).unwrap();
        c.constant = 0.2;
        let r = c.check(20, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.precondition_failure.unwrap().precondition, Precondition::Semiconvexity);

        let mut c = tight_case(1).unwrap();
        c.rhs = ScalarField::new("too small", |_| -5.0);
        let r = c.check(20, 1).unwrap();
        assert_eq!(r.precondition_failure.unwrap().precondition, Precondition::Supersolution);
    }
}
