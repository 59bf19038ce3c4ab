//! Relative-error grids over `q` for fixed `(r, p)`, regime labels, and
//! CSV/JSON export.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use rug::Float;
use serde_json::{Map, Number, Value};

use crate::approx::{cd, hennecart, large_q, relative_error};
use crate::bigcomb::{stirling_row, ExactCount};
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::prec::{fmt_sci17, PrecReal};
use crate::saddle::saddle_for;

/// Cells excluded at each end of a curve by [`same_curve_deviation`].
pub const SAME_CURVE_EXCLUDED_CELLS: usize = 3;

/// Column order of the exported grid.
pub const COLUMNS: [&str; 12] = [
    "r",
    "p",
    "q",
    "a",
    "z0",
    "qz0",
    "log_exact",
    "rel_err_F",
    "rel_err_C",
    "rel_err_W",
    "scaled_err_F",
    "regime",
];

/// Which half of the two-regime split a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `1 ≤ p − rq ≤ p^{1/5}`.
    HighQ,
    LowQ,
}

impl Regime {
    pub fn classify(p: u64, a: u64) -> Regime {
        // a ≤ p^{1/5} ⇔ a⁵ ≤ p
        if a >= 1 && u128::from(a).pow(5) <= u128::from(p) {
            Regime::HighQ
        } else {
            Regime::LowQ
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::HighQ => "HighQ",
            Regime::LowQ => "LowQ",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HighQ" => Ok(Regime::HighQ),
            "LowQ" => Ok(Regime::LowQ),
            other => Err(Error::Parse(format!("unknown regime {other:?}"))),
        }
    }
}

/// One `(r, p, q)` cell. Numeric fields are `None` when the cell is flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub r: u32,
    pub p: u64,
    pub q: u64,
    pub a: u64,
    pub z0: Option<PrecReal>,
    pub qz0: Option<PrecReal>,
    pub log_exact: Option<PrecReal>,
    /// `F_r/S_r − 1`.
    pub rel_err_f: Option<PrecReal>,
    /// `C_r/S_r − 1`.
    pub rel_err_c: Option<PrecReal>,
    /// `W_r/S_r − 1`, when the large-q formula was evaluated.
    pub rel_err_w: Option<PrecReal>,
    /// `p·rel_err_F`.
    pub scaled_err_f: Option<PrecReal>,
    pub regime: Regime,
    /// Why the cell could not be evaluated.
    pub flag: Option<String>,
}

impl ErrorRecord {
    fn flagged(r: u32, p: u64, q: u64, reason: String) -> Self {
        let a = p.saturating_sub(u64::from(r) * q);
        ErrorRecord {
            r,
            p,
            q,
            a,
            z0: None,
            qz0: None,
            log_exact: None,
            rel_err_f: None,
            rel_err_c: None,
            rel_err_w: None,
            scaled_err_f: None,
            regime: Regime::classify(p, a),
            flag: Some(reason),
        }
    }

    pub fn is_flagged(&self) -> bool {
        self.flag.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub precision_bits: u32,
    pub caps: Caps,
    /// Also evaluate the large-q formula in every cell.
    pub large_q: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            precision_bits: crate::prec::DEFAULT_PRECISION,
            caps: Caps::default(),
            large_q: true,
        }
    }
}

/// Largest `q` with `p − rq ≥ 1`.
pub fn max_interior_q(r: u32, p: u64) -> u64 {
    p.saturating_sub(1) / u64::from(r.max(1))
}

fn check_range(r: u32, p: u64, q_range: &RangeInclusive<u64>) -> Result<()> {
    let hi = max_interior_q(r, p);
    if r < 1 || p < 1 {
        return Err(Error::domain(format!(
            "grid needs r ≥ 1 and p ≥ 1 (r = {r}, p = {p})"
        )));
    }
    if q_range.is_empty() || *q_range.start() < 1 || *q_range.end() > hi {
        return Err(Error::domain(format!(
            "q range {}..={} is not inside [1, {hi}] for r = {r}, p = {p}",
            q_range.start(),
            q_range.end()
        )));
    }
    Ok(())
}

/// Relative errors of the approximations against exact values for each `q`.
///
/// Exact values come from one recurrence row; cells are evaluated in parallel
/// and returned in `q` order. A cell whose evaluation fails is returned with
/// [`ErrorRecord::flag`] set instead of aborting the grid.
pub fn error_grid(
    r: u32,
    p: u64,
    q_range: RangeInclusive<u64>,
    opts: &GridOptions,
) -> Result<Vec<ErrorRecord>> {
    check_range(r, p, &q_range)?;
    let row = stirling_row(r, p, &opts.caps)?;
    let qs: Vec<u64> = q_range.collect();
    Ok(qs
        .par_iter()
        .map(|&q| {
            evaluate_cell(r, p, q, &row[q as usize], opts)
                .unwrap_or_else(|e| ErrorRecord::flagged(r, p, q, e.to_string()))
        })
        .collect())
}

/// Grid over every interior `q`, `1 ≤ q ≤ ⌊(p−1)/r⌋`.
pub fn full_error_grid(r: u32, p: u64, opts: &GridOptions) -> Result<Vec<ErrorRecord>> {
    error_grid(r, p, 1..=max_interior_q(r, p), opts)
}

fn evaluate_cell(
    r: u32,
    p: u64,
    q: u64,
    exact: &ExactCount,
    opts: &GridOptions,
) -> Result<ErrorRecord> {
    let prec = opts.precision_bits;
    let a = p - u64::from(r) * q;
    let log_exact = exact.ln(prec)?;
    let f = hennecart(r, p, q, prec)?;
    let c = cd(r, p, q, prec)?;
    let rel_err_f = relative_error(&f.log_value, &log_exact);
    let rel_err_c = relative_error(&c.log_value, &log_exact);
    let rel_err_w = if opts.large_q {
        let w = large_q(r, q, a, prec)?;
        Some(relative_error(&w.log_value, &log_exact))
    } else {
        None
    };
    let z0 = f.z0.expect("Hennecart result carries z0");
    let qz0 = Float::with_val(prec, &z0 * q);
    let scaled = Float::with_val(prec, &rel_err_f * p);
    Ok(ErrorRecord {
        r,
        p,
        q,
        a,
        z0: Some(z0),
        qz0: Some(qz0),
        log_exact: Some(log_exact),
        rel_err_f: Some(rel_err_f),
        rel_err_c: Some(rel_err_c),
        rel_err_w,
        scaled_err_f: Some(scaled),
        regime: Regime::classify(p, a),
        flag: None,
    })
}

/// Largest `|p·rel_err_F|` over unflagged cells.
pub fn max_abs_scaled_error(records: &[ErrorRecord]) -> Option<f64> {
    records
        .iter()
        .filter_map(|rec| rec.scaled_err_f.as_ref())
        .map(|s| s.to_f64().abs())
        .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
}

/// Largest `|rel_err_F|·q·z₀` over unflagged cells with `p − rq ≥ p^{1/5}`,
/// the empirical constant in `|F_r/S_r − 1| ≤ K/(q·z₀)`.
pub fn envelope_constant(records: &[ErrorRecord]) -> Option<f64> {
    records
        .iter()
        .filter(|rec| u128::from(rec.a).pow(5) >= u128::from(rec.p))
        .filter_map(|rec| Some(rec.rel_err_f.as_ref()?.to_f64().abs() * rec.qz0.as_ref()?.to_f64()))
        .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
}

fn scaled_curve(records: &[ErrorRecord], exclude: usize) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|rec| {
            Some((
                rec.q as f64 / rec.p as f64,
                rec.scaled_err_f.as_ref()?.to_f64(),
            ))
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if points.len() <= 2 * exclude {
        return Vec::new();
    }
    points[exclude..points.len() - exclude].to_vec()
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let i = curve.partition_point(|&(cx, _)| cx < x);
    if i < curve.len() && curve[i].0 == x {
        return Some(curve[i].1);
    }
    if i == 0 || i == curve.len() {
        return None;
    }
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Largest absolute difference between two scaled-error curves plotted
/// against `q/p`, each linearly interpolated, over their common range after
/// dropping `exclude` cells at each end of both curves.
///
/// Returns `None` when the trimmed curves do not overlap.
pub fn same_curve_deviation(
    first: &[ErrorRecord],
    second: &[ErrorRecord],
    exclude: usize,
) -> Option<f64> {
    let a = scaled_curve(first, exclude);
    let b = scaled_curve(second, exclude);
    let mut worst: Option<f64> = None;
    for (this, other) in [(&a, &b), (&b, &a)] {
        for &(x, y) in this.iter() {
            if let Some(oy) = interpolate(other, x) {
                let d = (y - oy).abs();
                worst = Some(worst.map_or(d, |w| w.max(d)));
            }
        }
    }
    worst
}

/// One row of [`qz0_profile`].
#[derive(Debug, Clone)]
pub struct Qz0Point {
    pub q: u64,
    pub a: u64,
    pub qz0: PrecReal,
    /// `c·min(p^{0.9}, p − rq)`.
    pub lower_bound: f64,
    pub lower_bound_ok: bool,
    /// `q·z₀ / ((r+1)(p − rq))`, which tends to 1 as `q → p/r`.
    pub high_q_ratio: f64,
}

/// Default constant in `q·z₀ ≥ c·min(p^{0.9}, p − rq)`.
///
/// `Q_r(z) − z = z^r/((r−1)!·B_r(z)) ≤ r` because `B_r(z) ≥ z^r/r!`, so
/// `z₀ ≥ p/q − r` and `q·z₀ ≥ p − rq`; `c = 1` therefore always holds.
pub const QZ0_BOUND_CONSTANT: f64 = 1.0;

pub fn qz0_profile(
    r: u32,
    p: u64,
    q_range: RangeInclusive<u64>,
    constant: f64,
    prec: u32,
) -> Result<Vec<Qz0Point>> {
    check_range(r, p, &q_range)?;
    let qs: Vec<u64> = q_range.collect();
    qs.par_iter()
        .map(|&q| {
            let a = p - u64::from(r) * q;
            let saddle = saddle_for(r, p, q, prec)?;
            let qz0 = Float::with_val(prec, &saddle.z0 * q);
            let lower_bound = constant * (p as f64).powf(0.9).min(a as f64);
            let v = qz0.to_f64();
            Ok(Qz0Point {
                q,
                a,
                lower_bound,
                lower_bound_ok: v >= lower_bound,
                high_q_ratio: v / (f64::from(r + 1) * a as f64),
                qz0,
            })
        })
        .collect()
}

/// Output format of [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Parse(format!("unknown export format {other:?}"))),
        }
    }
}

fn opt_sci(v: &Option<PrecReal>) -> String {
    v.as_ref().map(fmt_sci17).unwrap_or_default()
}

fn record_fields(rec: &ErrorRecord) -> [String; 12] {
    [
        rec.r.to_string(),
        rec.p.to_string(),
        rec.q.to_string(),
        rec.a.to_string(),
        opt_sci(&rec.z0),
        opt_sci(&rec.qz0),
        opt_sci(&rec.log_exact),
        opt_sci(&rec.rel_err_f),
        opt_sci(&rec.rel_err_c),
        opt_sci(&rec.rel_err_w),
        opt_sci(&rec.scaled_err_f),
        rec.regime.to_string(),
    ]
}

/// Write records as CSV (header + one row per record) or as a JSON array of
/// objects keyed by [`COLUMNS`]. Floats use 17 significant digits in
/// scientific notation; values missing from flagged cells are empty (CSV) or
/// `null` (JSON).
pub fn export(records: &[ErrorRecord], format: ExportFormat, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::domain("nothing to export: no records"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        ExportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
            writer.write_record(COLUMNS).map_err(csv_err)?;
            for rec in records {
                writer.write_record(record_fields(rec)).map_err(csv_err)?;
            }
            writer.flush().map_err(|e| Error::io(path, e))?;
        }
        ExportFormat::Json => {
            let rows: Vec<Value> = records.iter().map(record_json).collect();
            serde_json::to_writer_pretty(&mut out, &Value::Array(rows))
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn record_json(rec: &ErrorRecord) -> Value {
    let fields = record_fields(rec);
    let mut map = Map::new();
    for (i, (name, text)) in COLUMNS.iter().zip(fields).enumerate() {
        let value = match i {
            0..=3 => Value::Number(Number::from_str(&text).expect("integer field")),
            11 => Value::String(text),
            _ if text.is_empty() => Value::Null,
            // NaN/inf are not JSON numbers
            _ => Number::from_str(&text)
                .map(Value::Number)
                .unwrap_or(Value::String(text)),
        };
        map.insert((*name).to_owned(), value);
    }
    Value::Object(map)
}

fn parse_opt_float(text: &str) -> Result<Option<PrecReal>> {
    if text.is_empty() {
        return Ok(None);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| Error::Parse(format!("bad float {text:?}")))?;
    Ok(Some(Float::with_val(64, v)))
}

fn parse_int<T: FromStr>(text: &str, column: &str) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Parse(format!("bad integer {text:?} in column {column}")))
}

fn record_from_fields(fields: &[String]) -> Result<ErrorRecord> {
    if fields.len() != COLUMNS.len() {
        return Err(Error::Parse(format!(
            "expected {} columns, found {}",
            COLUMNS.len(),
            fields.len()
        )));
    }
    let scaled_err_f = parse_opt_float(&fields[10])?;
    Ok(ErrorRecord {
        r: parse_int(&fields[0], "r")?,
        p: parse_int(&fields[1], "p")?,
        q: parse_int(&fields[2], "q")?,
        a: parse_int(&fields[3], "a")?,
        z0: parse_opt_float(&fields[4])?,
        qz0: parse_opt_float(&fields[5])?,
        log_exact: parse_opt_float(&fields[6])?,
        rel_err_f: parse_opt_float(&fields[7])?,
        rel_err_c: parse_opt_float(&fields[8])?,
        rel_err_w: parse_opt_float(&fields[9])?,
        flag: scaled_err_f.is_none().then(|| "flagged".to_owned()),
        scaled_err_f,
        regime: fields[11].parse()?,
    })
}

/// Read records back from a file written by [`export`]. Floats come back at
/// 64-bit precision; flagged rows get a generic flag.
pub fn import(format: ExportFormat, path: &Path) -> Result<Vec<ErrorRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        ExportFormat::Csv => {
            let mut reader = csv::Reader::from_reader(file);
            let header = reader
                .headers()
                .map_err(|e| Error::Parse(e.to_string()))?
                .clone();
            if header.iter().ne(COLUMNS.iter().copied()) {
                return Err(Error::Parse(format!("unexpected header {:?}", header)));
            }
            reader
                .records()
                .map(|row| {
                    let row = row.map_err(|e| Error::Parse(e.to_string()))?;
                    let fields: Vec<String> = row.iter().map(str::to_owned).collect();
                    record_from_fields(&fields)
                })
                .collect()
        }
        ExportFormat::Json => {
            let value: Value =
                serde_json::from_reader(file).map_err(|e| Error::Parse(e.to_string()))?;
            let rows = value
                .as_array()
                .ok_or_else(|| Error::Parse("expected a JSON array".into()))?;
            rows.iter()
                .map(|row| {
                    let fields = COLUMNS
                        .iter()
                        .map(|name| match row.get(*name) {
                            Some(Value::Null) | None => String::new(),
                            Some(Value::String(s)) => s.clone(),
                            Some(other) => other.to_string(),
                        })
                        .collect::<Vec<_>>();
                    record_from_fields(&fields)
                })
                .collect()
        }
    }
}
