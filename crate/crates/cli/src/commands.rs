//! Subcommand arguments and runners.

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;

use carnot_core::calculus::{verify_radial, RadialCheckReport, RadialSampling};
use carnot_core::convexity::{
    check_semiconvex_eigen, check_semiconvex_lines, shift_by_half_square, standard_catalog, ConvexityClass,
    HorizontalBallSampler,
};
use carnot_core::estimates::{
    ball_volume, counterexample_profile, pointwise_catalog, sweep_scaling, tight_case, verify_pucci_annihilation,
    AnnihilationReport, CounterexampleConfig, Estimate, FitSummary, GlueMode, PointwiseReport, QuadratureSpec,
    SweepRow, AGREEMENT_SIGMAS, POINTWISE_TOL,
};
use carnot_core::pucci::{
    property_suite, pucci_minus, pucci_oracle_check, pucci_plus, sym_eigenvalues, Ellipticity, SuiteRow, SuiteSpec,
    ORACLE_TOL,
};
use carnot_core::report::{self, format_f64, Report, Verdict};
use carnot_core::{FdScheme, GroupDescriptor, RadialProfile, Result, SymMatrix};

use crate::{parse, Command, Common, Outcome, RunConfig};

fn group_label(d: usize) -> String {
    format!("h:{d}")
}

fn config<P: Serialize>(subcommand: &'static str, common: &Common, samples: usize, params: P) -> RunConfig<P> {
    RunConfig { subcommand, seed: common.seed, samples, format: common.format, params }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Counterexample(a) => counterexample(a),
        Command::VerifyRadial(a) => verify_radial_cmd(a),
        Command::Pucci(a) => pucci(a),
        Command::Convexity(a) => convexity(a),
        Command::PointwiseBound(a) => pointwise(a),
        Command::BallVolume(a) => ball_volume_cmd(a),
    }
}

fn glue_parser(s: &str) -> std::result::Result<GlueMode, String> {
    s.parse().map_err(|e: carnot_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "h:1", value_parser = parse::group)]
    pub group: usize,
    #[arg(long, default_value = "0.5", value_parser = parse::scalar)]
    pub alpha: f64,
    /// Comma list; `2^-a..2^-b` expands to a dyadic range.
    #[arg(long, default_value = "2^-3..2^-8", value_parser = parse::list)]
    pub eps: std::vec::Vec<f64>,
    #[arg(long, default_value = "2,8/3", value_parser = parse::list)]
    pub q: std::vec::Vec<f64>,
    /// paper-literal or c1-variant.
    #[arg(long, default_value = "paper-literal", value_parser = glue_parser)]
    pub glue: GlueMode,
    /// Points per region in the annihilation check.
    #[arg(long, default_value_t = 10_000)]
    pub check_samples: usize,
    /// Annihilation tolerance, relative to eps^(alpha-2).
    #[arg(long, default_value = "1e-8", value_parser = parse::scalar)]
    pub tol: f64,
}

#[derive(Serialize)]
struct CounterexampleParams {
    group: String,
    alpha: f64,
    eps: Vec<f64>,
    q: Vec<f64>,
    glue: GlueMode,
    check_samples: usize,
    tol: f64,
}

#[derive(Serialize)]
struct CounterexampleSummary {
    homogeneous_dim: f64,
    q_star: f64,
    c1: f64,
    rhs_constant: f64,
    unit_ball_volume: Estimate,
    annihilation: Vec<AnnihilationReport>,
}

fn counterexample(a: &CounterexampleArgs) -> Result<Outcome> {
    let cfg = CounterexampleConfig::new(a.group, a.alpha, a.eps.clone(), a.q.clone(), a.glue)?;
    let samples = a.common.samples.unwrap_or(1_000_000);
    let quad = QuadratureSpec::monte_carlo(samples, a.common.seed)?;
    let sweep = sweep_scaling(&cfg, &quad)?;
    let mut verdicts = sweep.verdicts.clone();
    let mut annihilation = Vec::new();
    for &eps in &cfg.eps {
        let r = verify_pucci_annihilation(&cfg, eps, a.check_samples, a.common.seed, a.tol)?;
        let worst = r.max_outer_residual.max(r.max_inner_residual);
        verdicts.push(Verdict::new(
            format!("annihilation eps={}", format_f64(eps)),
            r.passed,
            worst,
            a.tol,
            format!("max |M+ - f| / eps^(alpha-2); FD cross-check {} points, max rel {}", r.fd_checked, format_f64(r.fd_max_rel_error)),
        ));
        annihilation.push(r);
    }
    let summary = CounterexampleSummary {
        homogeneous_dim: sweep.homogeneous_dim,
        q_star: sweep.q_star,
        c1: cfg.c1(),
        rhs_constant: cfg.rhs_constant(),
        unit_ball_volume: sweep.unit_ball_volume,
        annihilation,
    };
    let params = CounterexampleParams {
        group: group_label(a.group),
        alpha: a.alpha,
        eps: cfg.eps.clone(),
        q: cfg.q.clone(),
        glue: a.glue,
        check_samples: a.check_samples,
        tol: a.tol,
    };
    let mut head = vec![format!(
        "counterexample on {} alpha={} glue={}: Q={} q*={} |B_1|={} +- {}",
        group_label(a.group),
        a.alpha,
        a.glue,
        sweep.homogeneous_dim,
        format_f64(sweep.q_star),
        format_f64(sweep.unit_ball_volume.value),
        format_f64(sweep.unit_ball_volume.std_error)
    )];
    for f in &sweep.fits {
        head.push(format!(
            "fit {}: slope {} R^2 {}{}",
            f.name,
            format_f64(f.fit.slope),
            format_f64(f.fit.r_squared),
            f.predicted_slope.map(|p| format!(" predicted {}", format_f64(p))).unwrap_or_default()
        ));
    }
    let csv = report::sweep_csv(&sweep.rows)?;
    let rep: Report<_, SweepRow, FitSummary> =
        Report::new(config("counterexample", &a.common, samples, params), sweep.rows, sweep.fits, verdicts)
            .with_summary(summary);
    Outcome::new(&rep, Some(csv), head)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Rho4,
    Counterexample,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyRadialArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "h:1", value_parser = parse::group)]
    pub group: usize,
    #[arg(long, value_enum, default_value_t = ProfileKind::Rho4)]
    pub profile: ProfileKind,
    #[arg(long, default_value = "0.5", value_parser = parse::scalar)]
    pub alpha: f64,
    /// Splice radius of the counterexample profile.
    #[arg(long, default_value = "0.5", value_parser = parse::scalar)]
    pub eps: f64,
    #[arg(long, default_value = "paper-literal", value_parser = glue_parser)]
    pub glue: GlueMode,
    #[arg(long, default_value = "1e-5", value_parser = parse::scalar)]
    pub tol: f64,
}

#[derive(Serialize)]
struct RadialParams {
    group: String,
    profile: ProfileKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    glue: Option<GlueMode>,
    tol: f64,
}

fn verify_radial_cmd(a: &VerifyRadialArgs) -> Result<Outcome> {
    let g = GroupDescriptor::heisenberg(a.group)?;
    let samples = a.common.samples.unwrap_or(500);
    let mut sampling = RadialSampling::new(samples, a.common.seed);
    let (profile, params) = match a.profile {
        ProfileKind::Rho4 => (
            RadialProfile::power(4.0),
            RadialParams { group: group_label(a.group), profile: a.profile, alpha: None, eps: None, glue: None, tol: a.tol },
        ),
        ProfileKind::Counterexample => {
            let cfg = CounterexampleConfig::new(a.group, a.alpha, vec![a.eps], Vec::new(), a.glue)?;
            sampling = sampling.avoiding(&[a.eps]);
            (
                counterexample_profile(&cfg, a.eps)?,
                RadialParams {
                    group: group_label(a.group),
                    profile: a.profile,
                    alpha: Some(a.alpha),
                    eps: Some(a.eps),
                    glue: Some(a.glue),
                    tol: a.tol,
                },
            )
        }
    };
    let r = verify_radial(&g, &profile, &sampling, a.tol)?;
    let mut verdicts = vec![Verdict::new(
        "closed-form-hessian",
        r.max_rel_error <= a.tol,
        r.max_rel_error,
        a.tol,
        "max |H_fd - H_closed|_F / |H_closed|_F",
    )];
    if r.expected_multiplicity > 0 {
        verdicts.push(Verdict::new(
            "eigenvalue-multiplicity",
            r.min_multiplicity >= r.expected_multiplicity,
            r.min_multiplicity as f64,
            r.expected_multiplicity as f64,
            "smallest observed multiplicity of psi' |D rho|^2 / rho",
        ));
    }
    let head = vec![format!(
        "verify-radial {} on {}: {} points, max rel error {}, max eigenvalue rel error {}",
        r.profile,
        group_label(a.group),
        r.samples,
        format_f64(r.max_rel_error),
        format_f64(r.max_eigen_rel_error)
    )];
    let rep: Report<_, RadialCheckReport, ()> =
        Report::new(config("verify-radial", &a.common, samples, params), vec![r], Vec::new(), verdicts);
    Outcome::new(&rep, None, head)
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["self_test", "matrix"])))]
pub struct PucciArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run the randomized property suite on dimensions 1..=6.
    #[arg(long)]
    pub self_test: bool,
    /// Evaluate M+ and M- of a symmetric matrix, rows separated by `;`.
    #[arg(long, value_parser = parse::matrix, allow_hyphen_values = true)]
    pub matrix: Option<std::vec::Vec<std::vec::Vec<f64>>>,
    #[arg(long, default_value = "0.5", value_parser = parse::scalar)]
    pub lambda: f64,
    #[arg(long = "big-lambda", visible_alias = "Lambda", default_value = "2", value_parser = parse::scalar)]
    pub big_lambda: f64,
}

#[derive(Serialize)]
struct PucciParams {
    mode: &'static str,
    lambda: f64,
    big_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<SuiteSpec>,
}

#[derive(Serialize)]
struct MatrixRow {
    eigenvalues: Vec<f64>,
    pucci_plus: f64,
    pucci_minus: f64,
    oracle_sup: f64,
    optimizer_value: f64,
}

fn pucci(a: &PucciArgs) -> Result<Outcome> {
    let e = Ellipticity::new(a.lambda, a.big_lambda)?;
    if let Some(rows) = &a.matrix {
        let m = SymMatrix::from_rows(rows)?;
        let samples = a.common.samples.unwrap_or(10_000);
        let spectrum = sym_eigenvalues(&m)?;
        let plus = pucci_plus(&m, &e)?;
        let minus = pucci_minus(&m, &e)?;
        let o = pucci_oracle_check(&m, &e, samples, a.common.seed)?;
        let verdicts = vec![
            Verdict::new("oracle-bounded", o.bounded, o.oracle_sup - o.formula_value, ORACLE_TOL, "sampled sup of Tr(AM) - M+(M)"),
            Verdict::new(
                "optimizer-attains",
                o.attained,
                (o.optimizer_value - o.formula_value).abs(),
                ORACLE_TOL,
                "|Tr(A*M) - M+(M)|",
            ),
        ];
        let head = vec![format!("M+ = {}  M- = {}", format_f64(plus), format_f64(minus))];
        let row = MatrixRow {
            eigenvalues: spectrum.eigenvalues.clone(),
            pucci_plus: plus,
            pucci_minus: minus,
            oracle_sup: o.oracle_sup,
            optimizer_value: o.optimizer_value,
        };
        let params =
            PucciParams { mode: "matrix", lambda: a.lambda, big_lambda: a.big_lambda, matrix: Some(rows.clone()), suite: None };
        let rep: Report<_, MatrixRow, ()> =
            Report::new(config("pucci", &a.common, samples, params), vec![row], Vec::new(), verdicts);
        return Outcome::new(&rep, None, head);
    }
    let mut spec = SuiteSpec::new(a.common.seed);
    if let Some(n) = a.common.samples {
        spec.oracle_samples = n;
    }
    let r = property_suite(&e, &spec)?;
    let verdicts = r.verdicts();
    let head = vec![format!(
        "pucci self-test, lambda={} Lambda={}, dims {}..={}, {} oracle samples, {} pairs",
        a.lambda, a.big_lambda, spec.dims.0, spec.dims.1, spec.oracle_samples, spec.pairs
    )];
    let params = PucciParams { mode: "self-test", lambda: a.lambda, big_lambda: a.big_lambda, matrix: None, suite: Some(spec) };
    let rep: Report<_, SuiteRow, ()> =
        Report::new(config("pucci", &a.common, spec.oracle_samples, params), r.rows, Vec::new(), verdicts);
    Outcome::new(&rep, None, head)
}

#[derive(Debug, Clone, Args)]
pub struct ConvexityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Semiconvexity constants to test.
    #[arg(long = "c", default_value = "0,0.5,1,2", value_parser = parse::list)]
    pub c: std::vec::Vec<f64>,
}

#[derive(Serialize)]
struct ConvexityParams {
    c: Vec<f64>,
}

#[derive(Serialize)]
struct ConvexityRow {
    field: String,
    group: String,
    class: ConvexityClass,
    c: f64,
    /// `c >= ` the entry's semiconvexity constant.
    expected: bool,
    lines: bool,
    eigen: bool,
    shifted_lines: bool,
    shifted_eigen: bool,
    lines_worst_slack: f64,
    eigen_worst_slack: f64,
}

fn convexity(a: &ConvexityArgs) -> Result<Outcome> {
    let samples = a.common.samples.unwrap_or(2000);
    if samples == 0 {
        return Err(carnot_core::Error::InvalidArgument("need at least one sample".into()));
    }
    if let Some(&c) = a.c.iter().find(|c| !(**c >= 0.0)) {
        return Err(carnot_core::Error::InvalidArgument(format!("semiconvexity constant must be >= 0, got {c}")));
    }
    let scheme = FdScheme::default();
    let seed = a.common.seed;
    let mut rows = Vec::new();
    for entry in standard_catalog() {
        let g = &entry.group;
        let sampler = HorizontalBallSampler::new(g, entry.radius)?;
        for &c in &a.c {
            let lines = check_semiconvex_lines(g, &entry.field, c, &sampler, samples, seed)?;
            let eigen = check_semiconvex_eigen(g, &entry.field, c, &sampler, samples, seed, &scheme)?;
            let shifted = shift_by_half_square(&entry.field, g.m(), c);
            let shifted_lines = check_semiconvex_lines(g, &shifted, 0.0, &sampler, samples, seed)?;
            let shifted_eigen = check_semiconvex_eigen(g, &shifted, 0.0, &sampler, samples, seed, &scheme)?;
            rows.push(ConvexityRow {
                field: entry.field.name().to_string(),
                group: g.label(),
                class: entry.class,
                c,
                expected: c >= entry.semiconvexity_constant,
                lines: lines.passed,
                eigen: eigen.passed,
                shifted_lines: shifted_lines.passed,
                shifted_eigen: shifted_eigen.passed,
                lines_worst_slack: lines.worst_slack,
                eigen_worst_slack: eigen.worst_slack,
            });
        }
    }
    let count = |f: &dyn Fn(&ConvexityRow) -> bool| rows.iter().filter(|r| f(r)).count() as f64;
    let disagree = count(&|r| r.lines != r.eigen);
    let unexpected = count(&|r| r.lines != r.expected || r.eigen != r.expected);
    let shift = count(&|r| r.shifted_lines != r.lines || r.shifted_eigen != r.eigen);
    let verdicts = vec![
        Verdict::new("agreement", disagree == 0.0, disagree, 0.0, "rows where line and eigenvalue verdicts differ"),
        Verdict::new("expected", unexpected == 0.0, unexpected, 0.0, "rows where a verdict differs from the known class"),
        Verdict::new("shift-identity", shift == 0.0, shift, 0.0, "rows where u + c|x_H|^2/2 is not convex exactly when u fails c"),
    ];
    let head = vec![format!(
        "convexity catalog: {} functions x {} constants, {} lines / points each",
        rows.len() / a.c.len().max(1),
        a.c.len(),
        samples
    )];
    let params = ConvexityParams { c: a.c.clone() };
    let rep: Report<_, ConvexityRow, ()> =
        Report::new(config("convexity", &a.common, samples, params), rows, Vec::new(), verdicts);
    Outcome::new(&rep, None, head)
}

#[derive(Debug, Clone, Args)]
pub struct PointwiseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Group of the tight case.
    #[arg(long, default_value = "h:1", value_parser = parse::group)]
    pub group: usize,
    /// Tolerance of the tight-case equalities.
    #[arg(long, default_value = "1e-9", value_parser = parse::scalar)]
    pub tol: f64,
}

#[derive(Serialize)]
struct PointwiseParams {
    group: String,
    tol: f64,
}

#[derive(Serialize)]
struct PointwiseRow {
    case: String,
    group: String,
    #[serde(flatten)]
    report: PointwiseReport,
}

fn pointwise(a: &PointwiseArgs) -> Result<Outcome> {
    let samples = a.common.samples.unwrap_or(1000);
    if !(a.tol > 0.0) {
        return Err(carnot_core::Error::InvalidArgument("tolerance must be positive".into()));
    }
    let seed = a.common.seed;
    let tight = tight_case(a.group)?;
    let m = tight.group.m() as f64;
    let tr = tight.check(samples, seed)?;
    let dev = [tr.sublaplacian.min, tr.sublaplacian.max, tr.upper_bound.min, tr.upper_bound.max, tr.lower_bound]
        .iter()
        .map(|v| (v + m).abs())
        .fold(0.0, f64::max);
    let mut verdicts = vec![Verdict::new(
        "tight-equality",
        tr.precondition_failure.is_none() && dev <= a.tol,
        dev,
        a.tol,
        format!("max deviation of lower bound, sub-Laplacian and upper bound from -{m}"),
    )];
    let mut rows = vec![PointwiseRow { case: tight.name.clone(), group: tight.group.label(), report: tr }];
    for case in pointwise_catalog() {
        let r = case.check(samples, seed)?;
        let margin = r.lower_margin.min.min(r.upper_margin.min);
        verdicts.push(Verdict::new(
            format!("margin {}", case.name),
            r.passed && margin > 0.0,
            margin,
            0.0,
            format!("smallest margin of -4Cm <= Delta_X u <= bound, tolerance {}", format_f64(POINTWISE_TOL)),
        ));
        rows.push(PointwiseRow { case: case.name.clone(), group: case.group.label(), report: r });
    }
    let head = vec![format!("pointwise bound: tight case on {} plus {} catalog cases, {samples} points each", group_label(a.group), rows.len() - 1)];
    let params = PointwiseParams { group: group_label(a.group), tol: a.tol };
    let rep: Report<_, PointwiseRow, ()> =
        Report::new(config("pointwise-bound", &a.common, samples, params), rows, Vec::new(), verdicts);
    Outcome::new(&rep, None, head)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mc,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct BallVolumeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "h:1", value_parser = parse::group)]
    pub group: usize,
    /// Radii; `|B_1|` is always estimated as the reference.
    #[arg(long, default_value = "1", value_parser = parse::list)]
    pub r: std::vec::Vec<f64>,
    #[arg(long, value_enum, default_value_t = Method::Mc)]
    pub method: Method,
}

#[derive(Serialize)]
struct BallParams {
    group: String,
    r: Vec<f64>,
    method: Method,
}

#[derive(Serialize)]
struct BallRow {
    r: f64,
    volume: Estimate,
    /// `|B_r| / |B_1|`
    ratio: Estimate,
    /// `r^Q`
    predicted_ratio: f64,
}

fn ball_volume_cmd(a: &BallVolumeArgs) -> Result<Outcome> {
    let g = GroupDescriptor::heisenberg(a.group)?;
    if let Some(&r) = a.r.iter().find(|r| !(**r > 0.0)) {
        return Err(carnot_core::Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let samples = a.common.samples.unwrap_or(1_000_000);
    let quad = match a.method {
        Method::Mc => QuadratureSpec::monte_carlo(samples, a.common.seed)?,
        Method::Grid => QuadratureSpec::tensor_grid(samples)?,
    };
    let big_q = g.homogeneous_dim() as f64;
    let unit = ball_volume(&g, 1.0, &quad)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut head = Vec::new();
    for &r in &a.r {
        let volume = if r == 1.0 { unit } else { ball_volume(&g, r, &quad)? };
        let ratio = if r == 1.0 { Estimate::exact(1.0) } else { volume.ratio(unit) };
        let predicted = r.powf(big_q);
        head.push(format!(
            "|B_{r}| on {} = {} +- {}",
            group_label(a.group),
            format_f64(volume.value),
            format_f64(volume.std_error)
        ));
        if r != 1.0 {
            let dev = (ratio.value - predicted).abs();
            let threshold = AGREEMENT_SIGMAS * ratio.std_error;
            verdicts.push(Verdict::new(
                format!("homogeneity r={}", format_f64(r)),
                dev <= threshold,
                dev,
                threshold,
                format!("|ratio - r^Q| against {AGREEMENT_SIGMAS} standard errors, Q = {big_q}"),
            ));
        }
        rows.push(BallRow { r, volume, ratio, predicted_ratio: predicted });
    }
    let params = BallParams { group: group_label(a.group), r: a.r.clone(), method: a.method };
    let rep: Report<_, BallRow, ()> =
        Report::new(config("ball-volume", &a.common, samples, params), rows, Vec::new(), verdicts);
    Outcome::new(&rep, None, head)
}
