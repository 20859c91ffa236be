//! `(eps, q)` sweeps of the counterexample family with scaling fits.

use std::collections::BTreeMap;

use serde::Serialize;

use super::counterexample::{counterexample_profile, CounterexampleConfig, GlueMode, Regime};
use super::fit::{fit_line, LineFit, MIN_FIT_POINTS};
use super::quadrature::{ball_integral, ball_volume, Estimate, QuadratureSpec};
use crate::calculus::radial::{frame_unchecked, hessian_from_frame};
use crate::calculus::RadialProfile;
use crate::error::{Error, Result};
use crate::report::Verdict;
use crate::group::heisenberg_norm;
use crate::rng;

pub const SLOPE_TOL: f64 = 0.05;
pub const BOUNDED_RATIO: f64 = 1.2;
pub const MIN_R_SQUARED: f64 = 0.99;
pub const AGREEMENT_SIGMAS: f64 = 3.0;
/// Relative tolerance between fitted and predicted log-growth slopes.
pub const LOG_SLOPE_TOL: f64 = 0.05;
const SUP_GRID: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub q: f64,
    pub regime: Regime,
    /// `int_{B_1} |f|^q`, direct Monte Carlo over `B_eps`.
    pub f_norm_power: Estimate,
    /// `K^q eps^{(alpha-2)q+Q} J_q` with `J_q = int_{B_1} |D_X rho|^{2q}`.
    pub f_norm_power_closed: Estimate,
    pub f_norm: Estimate,
    /// `int_{B_eps} |(D^2_X u)*|_F^q` from the constant inner Hessian magnitude.
    pub hessian_inner_power: Estimate,
    /// The same integral by direct Monte Carlo.
    pub hessian_inner_power_mc: Estimate,
    /// `int_{B_1 \ B_eps} |(D^2_X u)*|_F^q`, dyadic shells.
    pub hessian_outer_power: Estimate,
    pub hessian_outer_norm: Estimate,
    /// `||(D^2_X u)*||_{L^q(B_1)}`
    pub hessian_norm: Estimate,
    /// `sup_{B_1} |u|`
    pub u_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub name: String,
    pub q: f64,
    pub x: String,
    pub y: String,
    pub predicted_slope: Option<f64>,
    #[serde(flatten)]
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub d: usize,
    pub alpha: f64,
    pub glue: GlueMode,
    pub homogeneous_dim: f64,
    pub q_star: f64,
    pub unit_ball_volume: Estimate,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<FitSummary>,
    pub verdicts: Vec<Verdict>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// `|(D^2_X psi(rho))*|_F` from the closed-form eigenvalues; `None` on the axis.
fn hessian_frobenius(d: usize, p: &RadialProfile, x: &[f64]) -> Option<f64> {
    let frame = frame_unchecked(d, x).ok()?;
    let h = hessian_from_frame(d, p, &frame);
    Some(h.eigenvalues.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn grad_norm2(d: usize, x: &[f64]) -> Option<f64> {
    frame_unchecked(d, x).ok().map(|f| f.grad_norm2)
}

/// Dyadic shells `[max(eps, 2^-k), 2^{-k+1})` covering `[eps, 1)`.
fn shells(eps: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut hi = 1.0f64;
    while hi > eps {
        out.push(((0.5 * hi).max(eps), hi));
        hi *= 0.5;
    }
    out
}

fn validate(cfg: &CounterexampleConfig) -> Result<()> {
    if cfg.eps.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!("need at least {MIN_FIT_POINTS} eps values, got {}", cfg.eps.len())));
    }
    let lo = cfg.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cfg.eps.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log2() < 2.0 - 1e-12 {
        return Err(Error::DegenerateFit(format!("eps list spans {:.3} dyadic steps, need 2", (hi / lo).log2())));
    }
    if cfg.q.is_empty() {
        return Err(Error::InvalidArgument("q list is empty".into()));
    }
    Ok(())
}

/// Runs every `(eps, q)` row, the scaling fits and the verdicts.
pub fn sweep_scaling(cfg: &CounterexampleConfig, quad: &QuadratureSpec) -> Result<SweepReport> {
    let cfg = CounterexampleConfig::new(cfg.d, cfg.alpha, cfg.eps.clone(), cfg.q.clone(), cfg.glue)?;
    validate(&cfg)?;
    let d = cfg.d;
    let g = cfg.group();
    let big_q = cfg.homogeneous_dim();
    let alpha = cfg.alpha;

    let unit_ball_volume = ball_volume(&g, 1.0, quad)?;
    let mut j_cache: BTreeMap<u64, Estimate> = BTreeMap::new();
    let mut shell_cache: BTreeMap<(u64, u64, u64, u64), Estimate> = BTreeMap::new();
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let p = counterexample_profile(&cfg, eps)?;
        let u_sup = sup_abs(&p, eps);
        let mut reference = vec![0.0; 2 * d + 1];
        reference[0] = 0.5 * eps;
        let kappa_in = hessian_frobenius(d, &p, &reference).expect("reference point is off the axis");
        let k = cfg.rhs_constant();
        for &q in &cfg.q {
            let jq = match j_cache.get(&q.to_bits()) {
                Some(j) => *j,
                None => {
                    let key = rng::key(&[0x7a, q.to_bits()]);
                    let j = ball_integral(&g, 1.0, quad, key, |x| grad_norm2(d, x).map(|g2| g2.powf(q)))?;
                    j_cache.insert(q.to_bits(), j);
                    j
                }
            };
            let scale = eps.powf(alpha - 2.0);
            let key_f = rng::key(&[0xf0, eps.to_bits(), q.to_bits()]);
            let f_norm_power =
                ball_integral(&g, eps, quad, key_f, |x| grad_norm2(d, x).map(|g2| (k * g2 * scale).powf(q)))?;
            let f_norm_power_closed = jq.scaled(k.powf(q) * eps.powf(cfg.f_exponent(q)));

            let hessian_inner_power = jq.scaled(kappa_in.powf(q) * eps.powf(big_q));
            let key_h = rng::key(&[0xf1, eps.to_bits(), q.to_bits()]);
            let hessian_inner_power_mc = ball_integral(&g, eps, quad, key_h, |x| hessian_frobenius(d, &p, x).map(|h| h.powf(q)))?;

            let mut outer = Estimate::exact(0.0);
            for (lo, hi) in shells(eps) {
                // the outer branch does not depend on eps, so equal shells are shared across rows
                let id = (q.to_bits(), lo.to_bits(), hi.to_bits(), alpha.to_bits());
                let part = match shell_cache.get(&id) {
                    Some(e) => *e,
                    None => {
                        let key = rng::key(&[0xf3, id.0, id.1, id.2]);
                        let e = ball_integral(&g, hi, quad, key, |x| {
                            if heisenberg_norm(d, x) < lo {
                                Some(0.0)
                            } else {
                                hessian_frobenius(d, &p, x).map(|h| h.powf(q))
                            }
                        })?;
                        shell_cache.insert(id, e);
                        e
                    }
                };
                outer = outer.plus(part);
            }
            rows.push(SweepRow {
                eps,
                q,
                regime: cfg.regime(q),
                f_norm: f_norm_power.powf(1.0 / q),
                f_norm_power,
                f_norm_power_closed,
                hessian_inner_power,
                hessian_inner_power_mc,
                hessian_outer_norm: outer.powf(1.0 / q),
                hessian_outer_power: outer,
                hessian_norm: hessian_inner_power.plus(outer).powf(1.0 / q),
                u_sup,
            });
        }
    }

    let (fits, verdicts) = assess(&cfg, &rows, &j_cache)?;
    Ok(SweepReport {
        d,
        alpha,
        glue: cfg.glue,
        homogeneous_dim: big_q,
        q_star: cfg.q_star(),
        unit_ball_volume,
        rows,
        fits,
        verdicts,
    })
}

/// `max |psi|` on a uniform grid of `[0, 1]` plus the splice radius.
fn sup_abs(p: &RadialProfile, eps: f64) -> f64 {
    (0..=SUP_GRID)
        .map(|i| i as f64 / SUP_GRID as f64)
        .chain(std::iter::once(eps))
        .map(|r| p.psi(r).abs())
        .fold(0.0, f64::max)
}

/// `|(D^2_X u)*|_F = c rho^{alpha-2} |D_X rho|^2` outside `B_eps`; returns `c`.
fn outer_constant(cfg: &CounterexampleConfig) -> Result<f64> {
    let p = counterexample_profile(cfg, 0.5)?;
    let mut x = vec![0.0; 2 * cfg.d + 1];
    x[0] = 1.0;
    Ok(hessian_frobenius(cfg.d, &p, &x).expect("off the axis"))
}

fn assess(
    cfg: &CounterexampleConfig,
    rows: &[SweepRow],
    j_cache: &BTreeMap<u64, Estimate>,
) -> Result<(Vec<FitSummary>, Vec<Verdict>)> {
    let mut fits = Vec::new();
    let mut verdicts = Vec::new();
    for &q in &cfg.q {
        let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.q == q).collect();
        let log_eps: Vec<f64> = sel.iter().map(|r| r.eps.ln()).collect();
        let log_inv: Vec<f64> = sel.iter().map(|r| -r.eps.ln()).collect();

        let predicted = cfg.f_exponent(q);
        let f_fit = fit_line(&log_eps, &sel.iter().map(|r| r.f_norm_power.value.ln()).collect::<Vec<_>>())?;
        let err = (f_fit.slope - predicted).abs();
        verdicts.push(Verdict::new(
            format!("f-scaling q={q}"),
            err <= SLOPE_TOL,
            f_fit.slope,
            SLOPE_TOL,
            format!("slope of log ||f||_q^q vs log eps is {:.4}, predicted {predicted:.4}", f_fit.slope),
        ));
        fits.push(FitSummary {
            name: format!("f-scaling q={q}"),
            q,
            x: "log eps".into(),
            y: "log ||f||_q^q".into(),
            predicted_slope: Some(predicted),
            fit: f_fit,
        });

        let regime = cfg.regime(q);
        let predicted_growth = if regime == Regime::Critical {
            let j = j_cache[&q.to_bits()].value;
            Some((outer_constant(cfg)?).powf(q) * cfg.homogeneous_dim() * j)
        } else {
            None
        };
        let h_fit = fit_line(&log_inv, &sel.iter().map(|r| r.hessian_outer_power.value).collect::<Vec<_>>())?;
        if regime == Regime::Critical {
            let norms: Vec<f64> = sel.iter().map(|r| r.f_norm.value).collect();
            let ratio = norms.iter().cloned().fold(0.0, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::new(
                format!("f-bounded q={q}"),
                ratio <= BOUNDED_RATIO,
                ratio,
                BOUNDED_RATIO,
                "max/min of ||f||_q over the eps list",
            ));
            verdicts.push(Verdict::new(
                format!("hessian-log-growth q={q}"),
                h_fit.r_squared >= MIN_R_SQUARED && h_fit.slope > 0.0,
                h_fit.r_squared,
                MIN_R_SQUARED,
                format!("outer Hessian q-mass vs log(1/eps): slope {:.4}, R^2 {:.6}", h_fit.slope, h_fit.r_squared),
            ));
            let want = predicted_growth.expect("critical");
            let rel = (h_fit.slope - want).abs() / want;
            verdicts.push(Verdict::new(
                format!("hessian-log-slope q={q}"),
                rel <= LOG_SLOPE_TOL,
                rel,
                LOG_SLOPE_TOL,
                format!("fitted slope {:.4} vs radial-integral prediction {want:.4}", h_fit.slope),
            ));
        }
        fits.push(FitSummary {
            name: format!("hessian-outer q={q}"),
            q,
            x: "log(1/eps)".into(),
            y: "||(D^2_X u)*||_q^q on B_1 minus B_eps".into(),
            predicted_slope: predicted_growth,
            fit: h_fit,
        });
    }

    let sup = rows.iter().map(|r| r.u_sup).fold(0.0, f64::max);
    verdicts.push(Verdict::new("u-bounded", sup <= 1.0, sup, 1.0, "sup |u| over B_1 across the eps list"));

    let mut worst = 0.0f64;
    for r in rows {
        for (a, b) in [(&r.f_norm_power, &r.f_norm_power_closed), (&r.hessian_inner_power_mc, &r.hessian_inner_power)] {
            let sigma = a.std_error.hypot(b.std_error);
            worst = worst.max((a.value - b.value).abs() / sigma);
        }
    }
    verdicts.push(Verdict::new(
        "inner-closed-form",
        worst <= AGREEMENT_SIGMAS,
        worst,
        AGREEMENT_SIGMAS,
        "largest |direct - closed form| in standard errors over inner f and Hessian masses",
    ));
    Ok((fits, verdicts))
}
