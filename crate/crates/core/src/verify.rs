//! Finite checks of coefficient non-negativity, the scaled-error bound, the
//! zero-free cone of `B_r`, and the bounds on `Q_r'`.
//!
//! A report records what was found. Checkers return `Err` only when their own
//! two-route cross-validation disagrees, never because a checked property failed.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;
use serde_json::{json, Number, Value};

use crate::analysis::{full_error_grid, GridOptions};
use crate::error::{Error, Result};
use crate::prec::{fmt_f64_sci17, fmt_sci17, PrecComplex};
use crate::specfun::{
    elasticity, elasticity_prime, elasticity_prime_fd, series_damped_tail_exp,
    series_damped_tail_exp_by_product, tail_exp_complex, tail_exp_complex_by_subtraction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    AllPass,
    CounterexampleFound,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub verdict: Verdict,
    /// First failure; present iff the verdict is `CounterexampleFound`.
    pub witness: Option<Value>,
    pub checked_range: String,
    /// Extra measurements (minima, maxima, locations).
    pub details: BTreeMap<String, Value>,
}

impl ConjectureReport {
    fn new(name: &str, parameters: BTreeMap<String, Value>, checked_range: String) -> Self {
        ConjectureReport {
            name: name.to_owned(),
            parameters,
            verdict: Verdict::AllPass,
            witness: None,
            checked_range,
            details: BTreeMap::new(),
        }
    }

    fn fail(&mut self, witness: Value) {
        if self.witness.is_none() {
            self.verdict = Verdict::CounterexampleFound;
            self.witness = Some(witness);
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn num(x: &Float) -> Value {
    Number::from_str(&fmt_sci17(x))
        .map(Value::Number)
        .unwrap_or_else(|_| Value::String(fmt_sci17(x)))
}

fn num_f64(x: f64) -> Value {
    Number::from_str(&fmt_f64_sci17(x))
        .map(Value::Number)
        .unwrap_or_else(|_| Value::String(fmt_f64_sci17(x)))
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| ((*k).to_owned(), v.clone()))
        .collect()
}

/// Default truncation order for the coefficient check.
pub const DEFAULT_SERIES_ORDER: usize = 300;

/// Whether `e^{−x/(r+1)}·B_r(x)` has non-negative Maclaurin coefficients
/// `c_0..=c_N`, in exact rationals.
///
/// The coefficients are computed twice, by the closed-form sum and by a
/// Cauchy product; any difference is an [`Error::Consistency`].
pub fn check_nonneg_coeffs(r: u32, order: usize, cap: usize) -> Result<ConjectureReport> {
    if r < 1 {
        return Err(Error::domain("r must be ≥ 1"));
    }
    let (direct, product) = rayon::join(
        || series_damped_tail_exp(r, order, cap),
        || series_damped_tail_exp_by_product(r, order, cap),
    );
    let (direct, product) = (direct?, product?);
    if let Some(n) = (0..=order).find(|&n| direct.coefficient(n) != product.coefficient(n)) {
        return Err(Error::Consistency(format!(
            "coefficient c_{n} of the damped series differs between routes: {} vs {}",
            direct.coefficient(n),
            product.coefficient(n)
        )));
    }
    let mut report = ConjectureReport::new(
        "nonneg-coeffs",
        params(&[("r", json!(r)), ("N", json!(order))]),
        format!("c_n for 0 <= n <= {order}"),
    );
    if let Some(n) = direct.first_negative() {
        let c = direct.coefficient(n);
        report.fail(json!({
            "index": n,
            "coefficient": c.to_string(),
            "approx": num(&Float::with_val(64, c)),
        }));
    }
    let zeros: Vec<usize> = (0..=order)
        .filter(|&n| direct.coefficient(n).cmp0().is_eq())
        .collect();
    report.details.insert("zero_indices".into(), json!(zeros));
    Ok(report)
}

/// Whether `p·|F_r/S_r − 1| ≤ bound` over every interior cell of each `p`.
///
/// Flagged cells make the verdict `Inconclusive` unless a violation is found.
pub fn check_scaled_error_bound(
    r: u32,
    p_list: &[u64],
    bound: f64,
    opts: &GridOptions,
) -> Result<ConjectureReport> {
    let mut report = ConjectureReport::new(
        "scaled-error",
        params(&[
            ("r", json!(r)),
            ("p", json!(p_list)),
            ("bound", num_f64(bound)),
        ]),
        "all 1 <= q <= floor((p-1)/r) for each p".to_owned(),
    );
    let mut maxima = Vec::new();
    let mut flagged = 0usize;
    for &p in p_list {
        let records = full_error_grid(r, p, opts)?;
        let mut worst: Option<(u64, f64)> = None;
        for rec in &records {
            let Some(scaled) = rec.scaled_err_f.as_ref() else {
                flagged += 1;
                continue;
            };
            let v = scaled.to_f64();
            if worst.is_none_or(|(_, w)| v.abs() > w) {
                worst = Some((rec.q, v.abs()));
            }
            if v.abs() > bound {
                report.fail(json!({ "p": p, "q": rec.q, "scaled_err_F": num(scaled) }));
            }
        }
        maxima.push(json!({
            "p": p,
            "max_abs_scaled_err_F": worst.map_or(Value::Null, |(_, w)| num_f64(w)),
            "argmax_q": worst.map_or(Value::Null, |(q, _)| json!(q)),
        }));
    }
    if flagged > 0 && report.verdict == Verdict::AllPass {
        report.verdict = Verdict::Inconclusive;
    }
    report.details.insert("per_p".into(), Value::Array(maxima));
    report
        .details
        .insert("flagged_cells".into(), json!(flagged));
    Ok(report)
}

/// `n` points spaced evenly in `ln x` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Default cone-scan grid: 200 points over `x ∈ [0.01, 50]`.
pub fn default_cone_grid() -> Vec<f64> {
    log_grid(0.01, 50.0, 200)
}

/// Default number of `y` samples per `x` in the cone scan.
pub const DEFAULT_CONE_Y_STEPS: usize = 41;

fn cone_sample(r: u32, x: f64, y: f64, prec: u32) -> Result<Float> {
    let z = PrecComplex::with_val(prec, x, y);
    let primary = tail_exp_complex(i64::from(r), &z);
    // Subtraction loses about r·log2(1/|z|) bits near the origin.
    let small = (-x.hypot(y).log2()).max(0.0).ceil() as u32;
    let work = prec + 64 + r * small + 8 * r;
    let alt = tail_exp_complex_by_subtraction(i64::from(r), &z.clone().with_prec(work));
    let m1 = primary.abs();
    let m2 = alt.abs();
    let diff = Float::with_val(work, &m1 - &m2).abs();
    let limit = Float::with_val(
        work,
        &m2 * Float::with_val(work, Float::i_exp(1, -((prec / 2) as i32))),
    );
    if diff > limit {
        return Err(Error::Consistency(format!(
            "|B_{r}({x}{y:+}i)| differs between series and subtraction routes: {} vs {}",
            fmt_sci17(&m1),
            fmt_sci17(&m2)
        )));
    }
    let damp = Float::with_val(prec, -x).exp();
    Ok(Float::with_val(prec, m1 * damp))
}

/// Minimum of `|B_r(x+iy)|·e^{−x}` over `x ∈ x_grid` and `y_steps` values of
/// `y` evenly spaced in `[−βx, βx]`.
///
/// `AllPass` when the minimum exceeds `2^{−prec/2}`, otherwise `Inconclusive`;
/// a sampled scan never certifies a zero.
pub fn scan_zero_free_cone(
    r: u32,
    beta: f64,
    x_grid: &[f64],
    y_steps: usize,
    prec: u32,
) -> Result<ConjectureReport> {
    if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(Error::domain(format!(
            "cone half-slope beta must be > 0, got {beta}"
        )));
    }
    if r < 1 {
        return Err(Error::domain("r must be ≥ 1"));
    }
    if x_grid
        .iter()
        .any(|&x| x.is_nan() || x <= 0.0 || !x.is_finite())
    {
        return Err(Error::domain("cone scan needs x > 0"));
    }
    let steps = y_steps.max(1);
    let points: Vec<(f64, f64)> = x_grid
        .iter()
        .flat_map(|&x| {
            (0..steps).map(move |j| {
                let y = if steps == 1 {
                    0.0
                } else {
                    beta * x * (2.0 * j as f64 / (steps - 1) as f64 - 1.0)
                };
                (x, y)
            })
        })
        .collect();
    let values = points
        .par_iter()
        .map(|&(x, y)| cone_sample(r, x, y, prec))
        .collect::<Result<Vec<_>>>()?;

    let mut report = ConjectureReport::new(
        "cone",
        params(&[
            ("r", json!(r)),
            ("beta", num_f64(beta)),
            ("x_points", json!(x_grid.len())),
            ("y_steps", json!(steps)),
            ("precision_bits", json!(prec)),
        ]),
        match (x_grid.first(), x_grid.last()) {
            (Some(lo), Some(hi)) => format!("x in [{lo}, {hi}], |y| <= beta*x"),
            _ => "empty grid".to_owned(),
        },
    );
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite samples"));
    let margin = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
    match best {
        Some((i, m)) => {
            let (x, y) = points[i];
            report
                .details
                .insert("min_normalized_modulus".into(), num(m));
            report
                .details
                .insert("argmin".into(), json!({ "x": num_f64(x), "y": num_f64(y) }));
            if *m <= margin {
                report.verdict = Verdict::Inconclusive;
            }
        }
        None => report.verdict = Verdict::Inconclusive,
    }
    Ok(report)
}

/// Slack allowed on the derivative bounds.
pub const DERIVATIVE_SLACK: f64 = 1e-20;

/// Relative agreement required between the closed-form and finite-difference
/// derivatives.
pub const FD_TOLERANCE: f64 = 1e-10;

/// Whether `1/(r+1) ≤ Q_r'(z) ≤ 1` (within [`DERIVATIVE_SLACK`]) at every
/// grid point, and whether `Q_r` increases strictly along the sorted grid.
///
/// Each derivative is cross-checked against a central finite difference.
pub fn check_q_derivative_bounds(
    r_list: &[u32],
    z_grid: &[f64],
    prec: u32,
) -> Result<ConjectureReport> {
    if z_grid
        .iter()
        .any(|&z| z.is_nan() || z <= 0.0 || !z.is_finite())
    {
        return Err(Error::domain("derivative bounds need z > 0"));
    }
    if r_list.contains(&0) {
        return Err(Error::domain("r must be ≥ 1"));
    }
    let mut grid = z_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let per_r = r_list
        .par_iter()
        .map(|&r| derivative_scan(r, &grid, prec))
        .collect::<Result<Vec<_>>>()?;

    let mut report = ConjectureReport::new(
        "q-derivative",
        params(&[
            ("r", json!(r_list)),
            ("z_points", json!(grid.len())),
            ("precision_bits", json!(prec)),
        ]),
        match (grid.first(), grid.last()) {
            (Some(lo), Some(hi)) => format!("z in [{lo}, {hi}]"),
            _ => "empty grid".to_owned(),
        },
    );
    let mut ranges = Vec::new();
    for (r, scan) in r_list.iter().zip(per_r) {
        if let Some(w) = scan.witness {
            report.fail(w);
        }
        ranges.push(json!({
            "r": r,
            "min_q_prime": scan.min.as_ref().map_or(Value::Null, num),
            "max_q_prime": scan.max.as_ref().map_or(Value::Null, num),
            "max_fd_rel_diff": num_f64(scan.max_fd_rel),
        }));
    }
    report.details.insert("per_r".into(), Value::Array(ranges));
    Ok(report)
}

struct DerivativeScan {
    min: Option<Float>,
    max: Option<Float>,
    max_fd_rel: f64,
    witness: Option<Value>,
}

fn derivative_scan(r: u32, grid: &[f64], prec: u32) -> Result<DerivativeScan> {
    let slack = Float::with_val(prec, DERIVATIVE_SLACK);
    let lower = Float::with_val(prec, 1) / (r + 1) - &slack;
    let upper = Float::with_val(prec, 1) + &slack;
    let mut scan = DerivativeScan {
        min: None,
        max: None,
        max_fd_rel: 0.0,
        witness: None,
    };
    let mut previous_q: Option<(f64, Float)> = None;
    for &zf in grid {
        let z = Float::with_val(prec, zf);
        let d = elasticity_prime(r, &z)?;
        let fd = elasticity_prime_fd(r, &z)?;
        let rel = (Float::with_val(prec, &d - &fd) / &d).abs().to_f64();
        if rel.is_nan() || rel > FD_TOLERANCE {
            return Err(Error::Consistency(format!(
                "Q_{r}'({zf}) closed form {} disagrees with finite difference {}",
                fmt_sci17(&d),
                fmt_sci17(&fd)
            )));
        }
        scan.max_fd_rel = scan.max_fd_rel.max(rel);
        if scan.witness.is_none() && (d < lower || d > upper) {
            scan.witness = Some(json!({ "r": r, "z": num_f64(zf), "q_prime": num(&d) }));
        }
        let q = elasticity(r, &z)?;
        if let Some((zp, qp)) = &previous_q {
            if scan.witness.is_none() && q <= *qp {
                scan.witness = Some(json!({
                    "r": r,
                    "z": num_f64(zf),
                    "previous_z": num_f64(*zp),
                    "q": num(&q),
                    "previous_q": num(qp),
                }));
            }
        }
        previous_q = Some((zf, q));
        if scan.min.as_ref().is_none_or(|m| d < *m) {
            scan.min = Some(d.clone());
        }
        if scan.max.as_ref().is_none_or(|m| d > *m) {
            scan.max = Some(d);
        }
    }
    Ok(scan)
}

/// Default `z` grid for [`check_q_derivative_bounds`].
pub fn default_derivative_grid() -> Vec<f64> {
    log_grid(1e-6, 1e3, 200)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: usize = 2000;

    #[test]
    fn nonneg_small_cases() {
        let rep = check_nonneg_coeffs(1, 200, CAP).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        assert!(rep.witness.is_none());
        // 2·sinh(x/2): every even coefficient vanishes
        let zeros = rep.details["zero_indices"].as_array().unwrap();
        assert_eq!(zeros.len(), 101);

        let rep = check_nonneg_coeffs(2, 3, CAP).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        assert_eq!(rep.details["zero_indices"], json!([0, 1, 3]));
    }

    #[test]
    fn nonneg_errors() {
        assert!(matches!(
            check_nonneg_coeffs(2, 0, CAP),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            check_nonneg_coeffs(2, CAP + 1, CAP),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn scaled_error_examples() {
        let opts = GridOptions::default();
        let rep = check_scaled_error_bound(2, &[20], 1e-9, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::CounterexampleFound);
        assert!(rep.witness.is_some());
        let rep = check_scaled_error_bound(2, &[50], 0.16, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        assert!(rep.witness.is_none());
    }

    #[test]
    fn cone_examples() {
        let rep = scan_zero_free_cone(1, 0.5, &log_grid(0.01, 50.0, 40), 1, 128).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        let rep = scan_zero_free_cone(2, 0.1, &log_grid(0.01, 50.0, 40), 11, 128).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        assert!(matches!(
            scan_zero_free_cone(2, 0.0, &[1.0], 3, 128),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cone_minimum_shrinks_with_beta() {
        let grid = log_grid(0.05, 20.0, 25);
        let mut last = f64::INFINITY;
        // odd step counts always sample y = 0
        for beta in [0.05, 0.1, 0.2, 0.4] {
            let rep = scan_zero_free_cone(2, beta, &grid, 9, 128).unwrap();
            let m = rep.details["min_normalized_modulus"].as_f64().unwrap();
            assert!(m <= last * (1.0 + 1e-12), "beta = {beta}: {m} > {last}");
            last = m;
        }
    }

    #[test]
    fn derivative_examples() {
        let rep = check_q_derivative_bounds(&[1, 3], &[1e-6, 1.0, 500.0], 128).unwrap();
        assert_eq!(rep.verdict, Verdict::AllPass);
        let d = elasticity_prime(1, &Float::with_val(128, 1e-6))
            .unwrap()
            .to_f64();
        assert!((d - 0.5).abs() < 1e-6);
        let d = elasticity_prime(3, &Float::with_val(128, 500.0))
            .unwrap()
            .to_f64();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(matches!(
            check_q_derivative_bounds(&[1], &[0.0], 128),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reports_are_deterministic_and_serialize() {
        let a = check_nonneg_coeffs(3, 50, CAP).unwrap();
        let b = check_nonneg_coeffs(3, 50, CAP).unwrap();
        assert_eq!(a, b);
        let v = a.to_json();
        assert_eq!(v["verdict"], "AllPass");
        assert_eq!(v["name"], "nonneg-coeffs");
        assert!(v["witness"].is_null());
    }
}
