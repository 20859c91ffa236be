//! The radial family `u_{eps,alpha}` on `H^d` and its Pucci annihilation.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::calculus::radial::{frame_unchecked, hessian_from_frame};
use crate::calculus::{horizontal_hessian_sym, FdScheme, RadialProfile, ScalarField, StepScaling};
use crate::error::{invalid, Error, Result};
use crate::group::{heisenberg_norm, GroupDescriptor};
use crate::pucci::{pucci_plus, Ellipticity, SymMatrix};
use crate::rng::{self, StreamRng};

/// How the inner quadratic cap is spliced onto `1 - rho^alpha` at `rho = eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlueMode {
    /// Inner coefficient `alpha`: continuous, with a factor-2 kink at `rho = eps`.
    #[default]
    PaperLiteral,
    /// Inner coefficient `alpha / 2`: `C^1` across `rho = eps`.
    C1Variant,
}

impl GlueMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GlueMode::PaperLiteral => "paper-literal",
            GlueMode::C1Variant => "c1-variant",
        }
    }
}

impl fmt::Display for GlueMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GlueMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(GlueMode::PaperLiteral),
            "c1-variant" => Ok(GlueMode::C1Variant),
            _ => Err(invalid(format!("unknown glue mode '{s}' (expected paper-literal or c1-variant)"))),
        }
    }
}

/// Where `q` sits relative to `q* = Q / (2 - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `q < q*`: `||f||_q -> 0` as `eps -> 0`, Hessian norms stay bounded.
    Decay,
    /// `q = q*`: `||f||_q` constant, outer Hessian mass grows like `log(1/eps)`.
    Critical,
    /// `q > q*`: `||f||_q` blows up.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleConfig {
    pub d: usize,
    pub alpha: f64,
    pub eps: Vec<f64>,
    pub q: Vec<f64>,
    pub glue: GlueMode,
}

impl CounterexampleConfig {
    pub fn new(d: usize, alpha: f64, eps: Vec<f64>, q: Vec<f64>, glue: GlueMode) -> Result<Self> {
        if d == 0 {
            return Err(invalid("Heisenberg dimension d must be at least 1"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let cfg = Self { d, alpha, eps, q, glue };
        for &e in &cfg.eps {
            cfg.check_eps(e)?;
        }
        let big_q = cfg.homogeneous_dim();
        for &q in &cfg.q {
            if !(q > 1.0 && q < big_q) {
                return Err(invalid(format!("q must lie in (1, Q) = (1, {big_q}), got {q}")));
            }
        }
        Ok(cfg)
    }

    pub fn check_eps(&self, eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
        }
        Ok(())
    }

    pub fn group(&self) -> GroupDescriptor {
        GroupDescriptor::heisenberg(self.d).expect("d >= 1 checked in new")
    }

    pub fn homogeneous_dim(&self) -> f64 {
        (2 * self.d + 2) as f64
    }

    /// `lambda = 1/(Q-1)`, `Lambda = 1/(1-alpha)`.
    pub fn ellipticity(&self) -> Ellipticity {
        let q = self.homogeneous_dim();
        Ellipticity::new(1.0 / (q - 1.0), 1.0 / (1.0 - self.alpha)).expect("Lambda > lambda for alpha in (0,1), Q >= 4")
    }

    /// `C_1 = 2 alpha Q / (Q - 1)`
    pub fn c1(&self) -> f64 {
        let q = self.homogeneous_dim();
        2.0 * self.alpha * q / (q - 1.0)
    }

    /// Coefficient `a` of `-a eps^{alpha-2} rho^2` in the inner cap.
    pub fn inner_coefficient(&self) -> f64 {
        match self.glue {
            GlueMode::PaperLiteral => self.alpha,
            GlueMode::C1Variant => 0.5 * self.alpha,
        }
    }

    /// `K` in `f = -K |D_X rho|^2 eps^{alpha-2}` on `B_eps`.
    pub fn rhs_constant(&self) -> f64 {
        match self.glue {
            GlueMode::PaperLiteral => self.c1(),
            GlueMode::C1Variant => 0.5 * self.c1(),
        }
    }

    /// `q* = Q / (2 - alpha)`
    pub fn q_star(&self) -> f64 {
        self.homogeneous_dim() / (2.0 - self.alpha)
    }

    /// Predicted exponent of `||f||_q^q` in `eps`: `(alpha - 2) q + Q`.
    pub fn f_exponent(&self, q: f64) -> f64 {
        (self.alpha - 2.0) * q + self.homogeneous_dim()
    }

    pub fn regime(&self, q: f64) -> Regime {
        let qs = self.q_star();
        if (q - qs).abs() <= 1e-12 * qs {
            Regime::Critical
        } else if q < qs {
            Regime::Decay
        } else {
            Regime::Growth
        }
    }
}

/// The radial profile of `u_{eps,alpha}`; smooth away from `rho = eps`.
pub fn counterexample_profile(cfg: &CounterexampleConfig, eps: f64) -> Result<RadialProfile> {
    cfg.check_eps(eps)?;
    let alpha = cfg.alpha;
    let a = cfg.inner_coefficient();
    let k = eps.powf(alpha - 2.0);
    // constant term chosen so both branches equal 1 - eps^alpha at rho = eps
    let c0 = 1.0 - (1.0 - a) * eps.powf(alpha);
    Ok(RadialProfile::new(
        format!("u[eps={eps},alpha={alpha},{}]", cfg.glue),
        move |r| if r < eps { c0 - a * k * r * r } else { 1.0 - r.powf(alpha) },
        move |r| if r < eps { -2.0 * a * k * r } else { -alpha * r.powf(alpha - 1.0) },
        move |r| if r < eps { -2.0 * a * k } else { alpha * (1.0 - alpha) * r.powf(alpha - 2.0) },
    )
    .with_smooth_set(move |r| r != eps))
}

pub fn counterexample_field(cfg: &CounterexampleConfig, eps: f64) -> Result<ScalarField> {
    let p = counterexample_profile(cfg, eps)?;
    Ok(p.to_field(cfg.d).renamed(p.name().to_string()))
}

/// `f_{eps,alpha}(x) = -K |D_X rho|^2 eps^{alpha-2}` inside `B_eps`, `0` outside.
pub fn counterexample_rhs(cfg: &CounterexampleConfig, eps: f64, x: &[f64]) -> Result<f64> {
    cfg.check_eps(eps)?;
    let d = cfg.d;
    if x.len() != 2 * d + 1 {
        return Err(invalid("point dimension mismatch"));
    }
    if heisenberg_norm(d, x) >= eps {
        return Ok(0.0);
    }
    let frame = frame_unchecked(d, x)?;
    Ok(-cfg.rhs_constant() * frame.grad_norm2 * eps.powf(cfg.alpha - 2.0))
}

/// Samples excluded near the singular axis and the splice shell.
pub const AXIS_EXCLUSION: f64 = 1e-8;
pub const SPLICE_EXCLUSION: f64 = 1e-6;

/// A point with gauge norm `rho`: `x_H = rho sqrt(cos th) omega`,
/// `t = rho^2 sin th`, `th` uniform in `(-pi/2, pi/2)`.
pub fn sample_on_gauge_sphere(rng: &mut StreamRng, d: usize, rho: f64) -> Vec<f64> {
    let th = rng::uniform(rng, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let len = rho * th.cos().max(0.0).sqrt();
    let mut x: Vec<f64> = rng::unit_vector(rng, 2 * d).into_iter().map(|w| len * w).collect();
    x.push(rho * rho * th.sin());
    x
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnihilationReport {
    pub eps: f64,
    pub tol: f64,
    /// `eps^{alpha-2}`; residuals below are divided by it.
    pub scale: f64,
    pub inner_samples: usize,
    pub outer_samples: usize,
    /// `max |M+| / eps^{alpha-2}` over `rho > eps`.
    pub max_outer_residual: f64,
    /// `max |M+ - f| / eps^{alpha-2}` over `rho < eps`.
    pub max_inner_residual: f64,
    /// `psi'' > 0` and `psi' < 0` at every outer sample.
    pub outer_sign_split: bool,
    pub fd_checked: usize,
    pub fd_max_rel_error: f64,
    pub fd_tol: f64,
    pub passed: bool,
    /// Worst violating point, if any check failed.
    pub witness: Option<Vec<f64>>,
}

pub const ANNIHILATION_FD_TOL: f64 = 1e-4;
const FD_EVERY: usize = 100;

struct PointCheck {
    residual: f64,
    x: Vec<f64>,
    sign_ok: bool,
    fd_rel: Option<f64>,
}

/// Checks `M+((D^2_X u)*) = f` with `lambda = 1/(Q-1)`, `Lambda = 1/(1-alpha)`
/// at `samples` points in each of `B_eps` and `B_1 \ B_eps`.
///
/// Inner points have `rho` uniform in `(0, eps)`, outer points `rho`
/// log-uniform in `(eps, 1)`, both away from the axis and the splice shell.
/// Hessians use the closed radial form; every 100th point is re-checked
/// against finite differences.
pub fn verify_pucci_annihilation(
    cfg: &CounterexampleConfig,
    eps: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AnnihilationReport> {
    let profile = counterexample_profile(cfg, eps)?;
    if samples == 0 {
        return Err(invalid("need at least one sample per region"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let d = cfg.d;
    let g = cfg.group();
    let e = cfg.ellipticity();
    let scale = eps.powf(cfg.alpha - 2.0);
    let field = profile.to_field(d);

    let check = |r: &mut StreamRng, i: usize, inner: bool| -> Result<PointCheck> {
        let x = loop {
            let rho = if inner {
                rng::uniform(r, 0.0, eps)
            } else {
                eps * (rng::uniform(r, 0.0, 1.0) * eps.ln().abs()).exp()
            };
            let x = sample_on_gauge_sphere(r, d, rho);
            let rho = heisenberg_norm(d, &x);
            let xh = x[..2 * d].iter().map(|a| a * a).sum::<f64>().sqrt();
            if xh >= AXIS_EXCLUSION && (rho - eps).abs() >= SPLICE_EXCLUSION && (rho < eps) == inner && rho < 1.0 {
                break x;
            }
        };
        let frame = frame_unchecked(d, &x)?;
        let rho = frame.rho;
        let h = hessian_from_frame(d, &profile, &frame);
        let mplus = pucci_plus(&h.matrix, &e)?;
        let f = counterexample_rhs(cfg, eps, &x)?;
        let sign_ok = inner || (profile.psi_second(rho) > 0.0 && profile.psi_prime(rho) < 0.0);
        let fd_rel = if i % FD_EVERY == 0 && (rho - eps).abs() >= 0.02 * rho && rho >= 0.05 * eps {
            let s = FdScheme::default().with_scaling(StepScaling::Graded { scale: rho });
            let fd = horizontal_hessian_sym(&g, &field, &x, &s)?;
            Some(relative_error(&fd, &h.matrix))
        } else {
            None
        };
        Ok(PointCheck { residual: (mplus - f).abs() / scale, x, sign_ok, fd_rel })
    };

    let run = |inner: bool| -> Result<Vec<PointCheck>> {
        if !inner && eps >= 1.0 {
            return Ok(Vec::new());
        }
        let key = rng::key(&[0xa77, eps.to_bits(), inner as u64]);
        rng::per_item(seed, key, samples, |r, i| check(r, i, inner)).into_iter().collect()
    };
    let inner = run(true)?;
    let outer = run(false)?;

    let worst = |v: &[PointCheck]| -> (f64, usize) {
        v.iter().enumerate().fold((0.0, 0), |(m, k), (i, p)| if p.residual > m { (p.residual, i) } else { (m, k) })
    };
    let (max_inner, wi) = worst(&inner);
    let (max_outer, wo) = worst(&outer);
    let outer_sign_split = outer.iter().all(|p| p.sign_ok);
    let fd: Vec<(f64, &Vec<f64>)> =
        inner.iter().chain(&outer).filter_map(|p| p.fd_rel.map(|e| (e, &p.x))).collect();
    let fd_max = fd.iter().map(|p| p.0).fold(0.0, f64::max);

    let passed = max_inner <= tol && max_outer <= tol && outer_sign_split && fd_max <= ANNIHILATION_FD_TOL;
    let witness = if passed {
        None
    } else if max_outer > tol {
        Some(outer[wo].x.clone())
    } else if max_inner > tol {
        Some(inner[wi].x.clone())
    } else if !outer_sign_split {
        outer.iter().find(|p| !p.sign_ok).map(|p| p.x.clone())
    } else {
        fd.iter().find(|p| p.0 > ANNIHILATION_FD_TOL).map(|p| p.1.clone())
    };
    Ok(AnnihilationReport {
        eps,
        tol,
        scale,
        inner_samples: samples,
        outer_samples: outer.len(),
        max_outer_residual: max_outer,
        max_inner_residual: max_inner,
        outer_sign_split,
        fd_checked: fd.len(),
        fd_max_rel_error: fd_max,
        fd_tol: ANNIHILATION_FD_TOL,
        passed,
        witness,
    })
}

/// `|A - B|_F / max(|B|_F, tiny)`
pub fn relative_error(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
