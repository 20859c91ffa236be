//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use carnot_core::calculus::{sublaplacian, verify_radial, RadialSampling, RADIAL_TOL};
use carnot_core::convexity::{
    check_semiconvex_eigen, check_semiconvex_lines, shift_by_half_square, standard_catalog, HorizontalBallSampler,
};
use carnot_core::estimates::{
    ball_volume, counterexample_profile, pointwise_catalog, sweep_scaling, tight_case, verify_pucci_annihilation,
    CounterexampleConfig, GlueMode, QuadratureSpec, AGREEMENT_SIGMAS,
};
use carnot_core::group::horizontal_norm2;
use carnot_core::pucci::{property_suite, Ellipticity, SuiteSpec};
use carnot_core::rng;
use carnot_core::{FdScheme, GroupDescriptor, RadialProfile, Result, ScalarField};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

const GLUES: [GlueMode; 2] = [GlueMode::PaperLiteral, GlueMode::C1Variant];

fn radial_oracle() -> Result<Outcome> {
    let ((worst, multiplicity_ok, checks), took) = timed(|| {
        let mut worst = 0.0f64;
        let mut multiplicity_ok = true;
        let mut checks = 0;
        for d in [1, 2] {
            let g = GroupDescriptor::heisenberg(d)?;
            let mut cases = vec![(RadialProfile::power(4.0), RadialSampling::new(500, 11))];
            for glue in GLUES {
                for alpha in [0.3, 0.5, 0.7] {
                    let eps = 0.5;
                    let cfg = CounterexampleConfig::new(d, alpha, vec![eps], Vec::new(), glue)?;
                    cases.push((counterexample_profile(&cfg, eps)?, RadialSampling::new(500, 12).avoiding(&[eps])));
                }
            }
            for (profile, sampling) in cases {
                let r = verify_radial(&g, &profile, &sampling, RADIAL_TOL)?;
                worst = worst.max(r.max_rel_error);
                if d == 2 {
                    multiplicity_ok &= r.expected_multiplicity == 2 && r.min_multiplicity >= 2;
                }
                checks += 1;
            }
        }
        Ok((worst, multiplicity_ok, checks))
    })?;
    let fast = took < Duration::from_secs(10);
    outcome(
        worst <= RADIAL_TOL && multiplicity_ok && fast,
        format!(
            "{checks} profiles x 500 points, max rel error {worst:.3e} (<= 1e-5), multiplicity 2d-2 on H^2: {multiplicity_ok}, {:.2}s (< 10s)",
            took.as_secs_f64()
        ),
    )
}

fn sublaplacian_rho4() -> Result<Outcome> {
    let g = GroupDescriptor::heisenberg(1)?;
    let u = ScalarField::rho4(1).without_derivatives();
    let s = FdScheme::default();
    let mut worst = 0.0f64;
    let mut r = rng::stream(21, rng::key(&[2]), 0);
    let mut n = 0;
    while n < 100 {
        let x: Vec<f64> = (0..3).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect();
        let want = 24.0 * horizontal_norm2(1, &x);
        if want < 24.0 * 0.05 * 0.05 {
            continue;
        }
        let got = sublaplacian(&g, &u, &x, &s)?;
        worst = worst.max((got - want).abs() / want);
        n += 1;
    }
    outcome(worst <= 1e-6, format!("100 points, finite-difference Delta_X rho^4 vs 24|x_H|^2, max rel error {worst:.3e} (<= 1e-6)"))
}

fn pucci_suite() -> Result<Outcome> {
    let e = Ellipticity::new(0.5, 2.0)?;
    let spec = SuiteSpec::new(31);
    let r = property_suite(&e, &spec)?;
    let verdicts = r.verdicts();
    let failed: Vec<_> = verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
    outcome(
        failed.is_empty() && spec.oracle_samples == 10_000 && spec.pairs == 1000,
        format!(
            "dims {}..={}, {} oracle samples, {} pairs; {} of {} properties hold{}",
            spec.dims.0,
            spec.dims.1,
            spec.oracle_samples,
            spec.pairs,
            verdicts.len() - failed.len(),
            verdicts.len(),
            if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join(", ")) }
        ),
    )
}

fn annihilation() -> Result<Outcome> {
    let eps = vec![0.125, 0.03125];
    let mut worst = 0.0f64;
    let mut all = true;
    let mut runs = 0;
    for glue in GLUES {
        for d in [1, 2] {
            for alpha in [0.3, 0.5, 0.7] {
                let cfg = CounterexampleConfig::new(d, alpha, eps.clone(), Vec::new(), glue)?;
                for &e in &eps {
                    let r = verify_pucci_annihilation(&cfg, e, 10_000, 41, 1e-8)?;
                    all &= r.passed && r.inner_samples == 10_000 && r.outer_samples == 10_000;
                    worst = worst.max(r.max_outer_residual).max(r.max_inner_residual);
                    runs += 1;
                }
            }
        }
    }
    outcome(all, format!("{runs} runs x 2 x 10^4 points, max residual {worst:.3e} eps^(alpha-2) (<= 1e-8 eps^(alpha-2))"))
}

struct SweepOutcomes {
    scaling: Outcome,
    blowup: Outcome,
}

fn sweep() -> Result<SweepOutcomes> {
    let eps: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let cfg = CounterexampleConfig::new(1, 0.5, eps, vec![2.0, 8.0 / 3.0], GlueMode::PaperLiteral)?;
    let quad = QuadratureSpec::monte_carlo(1_000_000, 42)?;
    let (rep, took) = timed(|| sweep_scaling(&cfg, &quad))?;
    let fit = |name: &str| rep.fits.iter().find(|f| f.name == name);
    let verdict = |name: &str| rep.verdicts.iter().find(|v| v.name == name);

    let scaling = match fit("f-scaling q=2") {
        Some(f) => Outcome {
            passed: (f.fit.slope - 1.0).abs() <= 0.05 && took < Duration::from_secs(60),
            detail: format!(
                "slope of log ||f||_2^2 vs log eps {:.4} (1.00 +- 0.05), sweep of {} rows at N=10^6 in {:.1}s (< 60s)",
                f.fit.slope,
                rep.rows.len(),
                took.as_secs_f64()
            ),
        },
        None => Outcome { passed: false, detail: "no q=2 fit".into() },
    };

    let qs = 8.0f64 / 3.0;
    let critical: Vec<_> = rep.rows.iter().filter(|r| r.q == qs).collect();
    let norms: Vec<f64> = critical.iter().map(|r| r.f_norm.value).collect();
    let ratio = norms.iter().cloned().fold(0.0, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let u_sup = rep.rows.iter().map(|r| r.u_sup).fold(0.0, f64::max);
    let growth = verdict(&format!("hessian-log-growth q={qs}"));
    let r2 = growth.map(|v| v.value).unwrap_or(f64::NAN);
    let blowup = Outcome {
        passed: critical.len() == 6 && ratio <= 1.2 && u_sup <= 1.0 && growth.is_some_and(|v| v.passed) && r2 >= 0.99,
        detail: format!(
            "q* = {:.6}: ||f||_q* max/min {ratio:.4} (<= 1.2), sup|u| {u_sup:.4} (<= 1), outer Hessian mass vs log(1/eps) R^2 {r2:.6} (>= 0.99)",
            rep.q_star
        ),
    };
    Ok(SweepOutcomes { scaling, blowup })
}

fn pointwise() -> Result<Outcome> {
    let mut tight_dev = 0.0f64;
    let mut ok = true;
    for d in [1, 2] {
        let case = tight_case(d)?;
        let m = case.group.m() as f64;
        let r = case.check(1000, 71)?;
        ok &= r.precondition_failure.is_none();
        for v in [r.lower_bound, r.sublaplacian.min, r.sublaplacian.max, r.upper_bound.min, r.upper_bound.max] {
            tight_dev = tight_dev.max((v + m).abs());
        }
    }
    let catalog = pointwise_catalog();
    let mut min_margin = f64::INFINITY;
    for case in &catalog {
        let r = case.check(1000, 72)?;
        ok &= r.passed;
        min_margin = min_margin.min(r.lower_margin.min).min(r.upper_margin.min);
    }
    outcome(
        ok && tight_dev <= 1e-9 && catalog.len() == 5 && min_margin > 0.0,
        format!(
            "tight case on H^1, H^2: max |side + m| {tight_dev:.3e} (<= 1e-9); {} catalog cases, smallest margin {min_margin:.4} (> 0)",
            catalog.len()
        ),
    )
}

fn convexity() -> Result<Outcome> {
    let scheme = FdScheme::default();
    let catalog = standard_catalog();
    let (mut disagree, mut shift, mut rows) = (0, 0, 0);
    for entry in &catalog {
        let g = &entry.group;
        let sampler = HorizontalBallSampler::new(g, entry.radius)?;
        for c in [0.0, 0.5, 1.0, 2.0] {
            let lines = check_semiconvex_lines(g, &entry.field, c, &sampler, 2000, 81)?.passed;
            let eigen = check_semiconvex_eigen(g, &entry.field, c, &sampler, 2000, 81, &scheme)?.passed;
            let shifted = shift_by_half_square(&entry.field, g.m(), c);
            let s_lines = check_semiconvex_lines(g, &shifted, 0.0, &sampler, 2000, 81)?.passed;
            let s_eigen = check_semiconvex_eigen(g, &shifted, 0.0, &sampler, 2000, 81, &scheme)?.passed;
            disagree += (lines != eigen) as usize;
            shift += (s_lines != lines || s_eigen != eigen) as usize;
            rows += 1;
        }
    }
    let classes = |k| catalog.iter().filter(|e| e.class == k).count();
    use carnot_core::convexity::ConvexityClass::*;
    let shape = (classes(Convex), classes(SemiconvexOnly), classes(Neither));
    outcome(
        disagree == 0 && shift == 0 && shape == (3, 2, 1),
        format!("catalog {shape:?} (convex, semiconvex-only, neither), {rows} rows: {disagree} line/eigen disagreements, {shift} shift-identity mismatches"),
    )
}

fn ball_homogeneity() -> Result<Outcome> {
    let quad = QuadratureSpec::monte_carlo(2_000_000, 91)?;
    let mut worst = 0.0f64;
    for d in [1, 2] {
        let g = GroupDescriptor::heisenberg(d)?;
        let big_q = g.homogeneous_dim() as f64;
        let unit = ball_volume(&g, 1.0, &quad)?;
        for r in [0.5, 2.0] {
            let ratio = ball_volume(&g, r, &quad)?.ratio(unit);
            worst = worst.max((ratio.value - r.powf(big_q)).abs() / ratio.std_error);
        }
    }
    outcome(
        worst <= AGREEMENT_SIGMAS,
        format!("|B_r|/|B_1| vs r^Q for r in {{0.5, 2}} on H^1, H^2: worst deviation {worst:.2} SE (<= 3)"),
    )
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| carnot_core::Error::Io(carnot_core::error::IoError(e.to_string())))?;
    let runs: [&[&str]; 3] = [
        &["counterexample", "--samples", "200000", "--check-samples", "2000", "--seed", "42"],
        &["ball-volume", "--group", "h:2", "--r", "0.5,2", "--samples", "200000", "--seed", "5"],
        &["convexity", "--samples", "300", "--seed", "9"],
    ];
    let mut identical = true;
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut reference: Option<Vec<u8>> = None;
        for (i, threads) in ["1", "4", "16", "1"].iter().enumerate() {
            let out = dir.path().join(format!("r{k}-{i}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_carnot"))
                .args(*args)
                .args(["--threads", threads, "--out"])
                .arg(&out)
                .stdout(std::process::Stdio::null())
                .status()
                .map_err(|e| carnot_core::Error::Io(carnot_core::error::IoError(e.to_string())))?;
            let bytes = std::fs::read(&out).unwrap_or_default();
            identical &= status.success() && !bytes.is_empty();
            match &reference {
                None => reference = Some(bytes),
                Some(r) => identical &= *r == bytes,
            }
            files += 1;
        }
    }
    outcome(identical, format!("{files} reports from 3 subcommands under 1, 4, 16 threads (and a repeat): byte-identical {identical}"))
}

fn report(id: usize, name: &str, r: Result<Outcome>, failures: &mut usize) {
    let (passed, detail) = match r {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !passed {
        *failures += 1;
    }
    println!("criterion {id:>2} [{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn main() {
    let mut failures = 0;
    report(1, "radial-calculus oracle", radial_oracle(), &mut failures);
    report(2, "sub-Laplacian of rho^4", sublaplacian_rho4(), &mut failures);
    report(3, "Pucci property suite", pucci_suite(), &mut failures);
    report(4, "counterexample annihilation", annihilation(), &mut failures);
    match sweep() {
        Ok(s) => {
            report(5, "scaling fit", Ok(s.scaling), &mut failures);
            report(6, "blow-up at q*", Ok(s.blowup), &mut failures);
        }
        Err(e) => {
            let msg = e.to_string();
            report(5, "scaling fit", Err(carnot_core::Error::InvalidArgument(msg.clone())), &mut failures);
            report(6, "blow-up at q*", Err(carnot_core::Error::InvalidArgument(msg)), &mut failures);
        }
    }
    report(7, "pointwise bound", pointwise(), &mut failures);
    report(8, "convexity checker agreement", convexity(), &mut failures);
    report(9, "ball-volume homogeneity", ball_homogeneity(), &mut failures);
    report(10, "determinism", determinism(), &mut failures);
    if failures > 0 {
        println!("{failures} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
