//! Report envelopes: JSON `{schema, version, config, rows, fits, verdicts, summary}` and CSV.
//!
//! Every float is written with 17 significant digits (`%.16e`), so a report
//! round-trips bit-for-bit and identical runs give identical bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, IoError, Result};
use crate::estimates::SweepRow;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value, threshold, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<C, R, F> {
    pub schema: u32,
    pub version: &'static str,
    pub config: C,
    pub rows: Vec<R>,
    pub fits: Vec<F>,
    pub verdicts: Vec<Verdict>,
    /// Headline scalars of the run.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

impl<C: Serialize, R: Serialize, F: Serialize> Report<C, R, F> {
    pub fn new(config: C, rows: Vec<R>, fits: Vec<F>, verdicts: Vec<Verdict>) -> Self {
        Self { schema: SCHEMA_VERSION, version: crate::VERSION, config, rows, fits, verdicts, summary: serde_json::Value::Null }
    }

    pub fn with_summary(mut self, summary: impl Serialize) -> Self {
        self.summary = serde_json::to_value(summary).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// `%.16e`, or `NaN` / `inf` / `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Pretty JSON with fixed-precision floats; non-finite floats become `null`.
pub struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Default for PreciseFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
    value.serialize(&mut ser).map_err(|e| Error::Io(IoError(e.to_string())))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Column order of [`sweep_csv`]; `_se` columns are one-sigma errors.
pub const SWEEP_CSV_HEADER: [&str; 20] = [
    "eps",
    "q",
    "regime",
    "f_norm_power",
    "f_norm_power_se",
    "f_norm_power_closed",
    "f_norm_power_closed_se",
    "f_norm",
    "f_norm_se",
    "hessian_inner_power",
    "hessian_inner_power_se",
    "hessian_inner_power_mc",
    "hessian_inner_power_mc_se",
    "hessian_outer_power",
    "hessian_outer_power_se",
    "hessian_outer_norm",
    "hessian_outer_norm_se",
    "hessian_norm",
    "hessian_norm_se",
    "u_sup",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(IoError(e.to_string()))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(IoError(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields"))
}

/// One line per `(eps, q)`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let regime = serde_json::to_value(r.regime).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let mut rec = vec![format_f64(r.eps), format_f64(r.q), regime];
        for e in [
            r.f_norm_power,
            r.f_norm_power_closed,
            r.f_norm,
            r.hessian_inner_power,
            r.hessian_inner_power_mc,
            r.hessian_outer_power,
            r.hessian_outer_norm,
            r.hessian_norm,
        ] {
            rec.push(format_f64(e.value));
            rec.push(format_f64(e.std_error));
        }
        rec.push(format_f64(r.u_sup));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

pub const VERDICT_CSV_HEADER: [&str; 5] = ["name", "passed", "value", "threshold", "detail"];

pub fn verdict_csv(verdicts: &[Verdict]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(VERDICT_CSV_HEADER).map_err(csv_err)?;
    for v in verdicts {
        w.write_record([
            v.name.clone(),
            v.passed.to_string(),
            format_f64(v.value),
            format_f64(v.threshold),
            v.detail.clone(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}
