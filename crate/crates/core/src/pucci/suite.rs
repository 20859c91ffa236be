//! Randomized property suite for the Pucci operators.

use serde::Serialize;

use super::{isaacs_gap, pucci_minus, pucci_oracle_check, pucci_plus, sample_admissible, Ellipticity, SymMatrix, ORACLE_TOL};
use crate::error::{invalid, Result};
use crate::report::Verdict;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteSpec {
    pub dims: (usize, usize),
    /// Test matrices per dimension for the sup oracle.
    pub matrices: usize,
    /// Admissible samples per oracle run.
    pub oracle_samples: usize,
    /// Random pairs per dimension for superadditivity, duality and Isaacs gaps.
    pub pairs: usize,
    pub seed: u64,
}

impl SuiteSpec {
    pub fn new(seed: u64) -> Self {
        Self { dims: (1, 6), matrices: 3, oracle_samples: 10_000, pairs: 1000, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub dim: usize,
    /// `max (oracle sup - formula)`, should be `<= 1e-10`.
    pub oracle_excess: f64,
    /// `max |Tr(A* M) - M+(M)|`
    pub optimizer_gap: f64,
    /// `max [M+(X+Y) - M+(X) - M+(Y)]` and `max [M-(X) + M-(Y) - M-(X+Y)]`
    pub superadditivity_violation: f64,
    /// `max |M-(X) + M+(-X)|`
    pub duality_error: f64,
    /// Smallest Isaacs gap over random `Y`, for `M+`, `M-` and a linear operator.
    pub min_isaacs_gap: f64,
    /// `max |gap|` with `Y = X`.
    pub isaacs_gap_at_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub ellipticity: Ellipticity,
    pub spec: SuiteSpec,
    pub tol: f64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    fn worst(&self, f: impl Fn(&SuiteRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        let tol = self.tol;
        let a = self.worst(|r| r.oracle_excess);
        let b = self.worst(|r| r.optimizer_gap);
        let c = self.worst(|r| r.superadditivity_violation);
        let d = self.worst(|r| r.duality_error);
        let e = -self.worst(|r| -r.min_isaacs_gap);
        let f = self.worst(|r| r.isaacs_gap_at_x);
        vec![
            Verdict::new("oracle-bounded", a <= tol, a, tol, "max over samples of Tr(AM) - M+(M)"),
            Verdict::new("optimizer-attains", b <= tol, b, tol, "|Tr(A*M) - M+(M)| for the spectral optimizer"),
            Verdict::new("superadditivity", c <= tol, c, tol, "M+ subadditive, M- superadditive on random pairs"),
            Verdict::new("duality", d <= tol, d, tol, "|M-(X) + M+(-X)|"),
            Verdict::new("isaacs-nonnegative", e >= -tol, e, -tol, "smallest Isaacs gap over random Y"),
            Verdict::new("isaacs-zero-at-x", f <= tol, f, tol, "|Isaacs gap| with Y = X"),
        ]
    }
}

fn gaussian_symmetric(r: &mut StreamRng, m: usize) -> SymMatrix {
    SymMatrix::from_fn(m, |_, _| rng::normal(r))
}

pub fn property_suite(e: &Ellipticity, spec: &SuiteSpec) -> Result<SuiteReport> {
    let (lo, hi) = spec.dims;
    if lo == 0 || hi < lo || spec.matrices == 0 || spec.pairs == 0 {
        return Err(invalid("suite needs 1 <= dim_lo <= dim_hi and non-zero sample counts"));
    }
    let mut rows = Vec::new();
    for m in lo..=hi {
        let mut oracle_excess = f64::NEG_INFINITY;
        let mut optimizer_gap = 0.0f64;
        for k in 0..spec.matrices {
            let mut r = rng::stream(spec.seed, rng::key(&[0x5e1f, m as u64]), k as u64);
            let x = gaussian_symmetric(&mut r, m);
            let rep = pucci_oracle_check(&x, e, spec.oracle_samples, rng::key(&[spec.seed, m as u64, k as u64]))?;
            oracle_excess = oracle_excess.max(rep.oracle_sup - rep.formula_value);
            optimizer_gap = optimizer_gap.max((rep.optimizer_value - rep.formula_value).abs());
        }
        let pair_rows = rng::per_item(spec.seed, rng::key(&[0x9a12, m as u64]), spec.pairs, |r, _| -> Result<[f64; 4]> {
            let x = gaussian_symmetric(r, m);
            let y = gaussian_symmetric(r, m);
            let s = &x + &y;
            let sup = (pucci_plus(&s, e)? - pucci_plus(&x, e)? - pucci_plus(&y, e)?)
                .max(pucci_minus(&x, e)? + pucci_minus(&y, e)? - pucci_minus(&s, e)?);
            let dual = (pucci_minus(&x, e)? + pucci_plus(&-&x, e)?).abs();
            let a = sample_admissible(r, m, e);
            let ys: Vec<SymMatrix> = (0..8).map(|_| gaussian_symmetric(r, m)).collect();
            let plus = |z: &SymMatrix| pucci_plus(z, e);
            let minus = |z: &SymMatrix| pucci_minus(z, e);
            let lin = |z: &SymMatrix| Ok(a.trace_product(z));
            let gap = isaacs_gap(plus, e, &x, &ys)?.min(isaacs_gap(minus, e, &x, &ys)?).min(isaacs_gap(lin, e, &x, &ys)?);
            let at_x = isaacs_gap(plus, e, &x, std::slice::from_ref(&x))?
                .abs()
                .max(isaacs_gap(lin, e, &x, std::slice::from_ref(&x))?.abs());
            Ok([sup, dual, gap, at_x])
        });
        let pair_rows = pair_rows.into_iter().collect::<Result<Vec<_>>>()?;
        let fold = |i: usize, init: f64, f: fn(f64, f64) -> f64| pair_rows.iter().map(|p| p[i]).fold(init, f);
        rows.push(SuiteRow {
            dim: m,
            oracle_excess,
            optimizer_gap,
            superadditivity_violation: fold(0, f64::NEG_INFINITY, f64::max),
            duality_error: fold(1, 0.0, f64::max),
            min_isaacs_gap: fold(2, f64::INFINITY, f64::min),
            isaacs_gap_at_x: fold(3, 0.0, f64::max),
        });
    }
    Ok(SuiteReport { ellipticity: *e, spec: *spec, tol: ORACLE_TOL, rows })
}
