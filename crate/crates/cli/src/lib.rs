//! The `carnot` command line.
//!
//! Every subcommand writes a report with the resolved configuration and the
//! tool version, prints a short summary, and exits 0 when all verdicts pass,
//! 1 when any invariant is falsified and 2 on usage or I/O errors.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use carnot_core::report::{self, Report, Verdict};
use carnot_core::Error;

mod commands;
pub mod parse;

#[derive(Debug, Parser)]
#[command(name = "carnot", version, about = "Verification harnesses for horizontal calculus on Carnot groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scaling sweep and Pucci annihilation of the radial counterexample family.
    Counterexample(commands::CounterexampleArgs),
    /// Closed-form radial Hessians against finite differences.
    VerifyRadial(commands::VerifyRadialArgs),
    /// Pucci operator property suite, or M+/M- of a given matrix.
    Pucci(commands::PucciArgs),
    /// Line-based and eigenvalue-based semiconvexity checks on the reference catalog.
    Convexity(commands::ConvexityArgs),
    /// Pointwise sub-Laplacian bounds on the reference supersolutions.
    PointwiseBound(commands::PointwiseArgs),
    /// Monte Carlo volume of gauge balls.
    BallVolume(commands::BallVolumeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. The output path and thread count do
/// not affect results and are left out of the embedded configuration.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sample count (subcommand-specific default).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Report file.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

/// The configuration embedded in every report.
#[derive(Debug, Serialize)]
pub struct RunConfig<P> {
    pub subcommand: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub format: Format,
    #[serde(flatten)]
    pub params: P,
}

/// A finished run: the report plus its CSV rendering and stdout summary.
pub struct Outcome {
    pub json: String,
    pub csv: String,
    pub summary: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    pub fn new<C: Serialize, R: Serialize, F: Serialize>(
        report: &Report<C, R, F>,
        csv: Option<String>,
        summary: Vec<String>,
    ) -> Result<Self, Error> {
        let csv = match csv {
            Some(c) => c,
            None => report::verdict_csv(&report.verdicts)?,
        };
        let mut lines = summary;
        lines.extend(report.verdicts.iter().map(verdict_line));
        Ok(Self { json: report.to_json()?, csv, summary: lines, passed: report.passed() })
    }
}

fn verdict_line(v: &Verdict) -> String {
    format!(
        "[{}] {}: {} (threshold {}) {}",
        if v.passed { "PASS" } else { "FAIL" },
        v.name,
        report::format_f64(v.value),
        report::format_f64(v.threshold),
        v.detail
    )
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let common = cli.command.common().clone();
    let mut sink = match &common.out {
        Some(path) => match File::create(path) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        },
        None => None,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    let outcome = match pool.install(|| commands::execute(&cli.command)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(path) = &common.out {
                drop(sink);
                let _ = std::fs::remove_file(path);
            }
            return 2;
        }
    };
    for line in &outcome.summary {
        println!("{line}");
    }
    if let Some(f) = sink.as_mut() {
        let body = match common.format {
            Format::Json => &outcome.json,
            Format::Csv => &outcome.csv,
        };
        if let Err(e) = f.write_all(body.as_bytes()).and_then(|_| f.flush()) {
            eprintln!("error: writing report failed: {e}");
            return 2;
        }
        println!("report written to {}", common.out.as_ref().expect("sink implies path").display());
    }
    if outcome.passed {
        0
    } else {
        1
    }
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Counterexample(a) => &a.common,
            Command::VerifyRadial(a) => &a.common,
            Command::Pucci(a) => &a.common,
            Command::Convexity(a) => &a.common,
            Command::PointwiseBound(a) => &a.common,
            Command::BallVolume(a) => &a.common,
        }
    }
}
