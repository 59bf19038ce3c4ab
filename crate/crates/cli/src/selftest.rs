use rug::Float;

use rassoc_core::analysis::{full_error_grid, max_abs_scaled_error, GridOptions};
use rassoc_core::approx::{cd, cd_from_hennecart};
use rassoc_core::bigcomb::{
    alekseyev_with_table, build_table, stirling_contour, stirling_partition_sum, ContourOptions,
    ExactCount,
};
use rassoc_core::saddle::{default_tolerance, saddle_for, solve_saddle};
use rassoc_core::specfun::{curvature_factor, elasticity, phase_second_derivative};
use rassoc_core::verify::{check_nonneg_coeffs, check_q_derivative_bounds, log_grid, Verdict};
use rassoc_core::{Error, Result};

use crate::config::RunConfig;

type Check = (
    &'static str,
    fn(&RunConfig) -> std::result::Result<String, String>,
);

const CHECKS: [Check; 9] = [
    ("known values", known_values),
    ("recurrence = Alekseyev (r=2, p<=40)", alekseyev),
    (
        "recurrence = partition sum (r<=3, q<=10, a<=5)",
        partition_sum,
    ),
    ("contour = exact", contour),
    ("CD closed form = definition", cd_identity),
    ("saddle round trip and Phi'' = 2qH/z0", saddle_identities),
    ("1/(r+1) <= Q' <= 1, Q increasing", q_bounds),
    ("damped series: both routes agree", series_routes),
    ("scaled error < 0.16 (r=2, p=50)", scaled_error),
];

fn err(e: Error) -> String {
    e.to_string()
}

fn known_values(cfg: &RunConfig) -> std::result::Result<String, String> {
    let s2 = build_table(2, 10, &cfg.caps).map_err(err)?;
    let s1 = build_table(1, 10, &cfg.caps).map_err(err)?;
    let bell: rug::Integer = s1.row(10).iter().sum();
    if s2.get(6, 2) != ExactCount::from(25) || bell != 115_975 {
        return Err("S_2(6,2) = 25 or Bell(10) = 115975 failed".into());
    }
    Ok("S_2(6,2) = 25, Bell(10) = 115975".into())
}

fn alekseyev(cfg: &RunConfig) -> std::result::Result<String, String> {
    let s1 = build_table(1, 40, &cfg.caps).map_err(err)?;
    let s2 = build_table(2, 40, &cfg.caps).map_err(err)?;
    for p in 1..=40 {
        for q in 1..=p / 2 {
            if alekseyev_with_table(&s1, p, q).map_err(err)? != s2.get(p, q) {
                return Err(format!("differ at p = {p}, q = {q}"));
            }
        }
    }
    Ok("400 cells".into())
}

fn partition_sum(cfg: &RunConfig) -> std::result::Result<String, String> {
    for r in 1..=3u32 {
        let table = build_table(r, u64::from(r) * 10 + 5, &cfg.caps).map_err(err)?;
        for q in 1..=10u64 {
            for a in 0..=5u64 {
                if stirling_partition_sum(r, q, a, &cfg.caps).map_err(err)?
                    != table.get(u64::from(r) * q + a, q)
                {
                    return Err(format!("differ at r = {r}, q = {q}, a = {a}"));
                }
            }
        }
    }
    Ok("180 cells".into())
}

fn contour(cfg: &RunConfig) -> std::result::Result<String, String> {
    let prec = cfg.precision_bits.max(128);
    let exact = build_table(2, 20, &cfg.caps)
        .map_err(err)?
        .get(20, 7)
        .ln(prec)
        .map_err(err)?;
    let est = stirling_contour(2, 20, 7, &ContourOptions::new(prec)).map_err(err)?;
    let rel = Float::with_val(prec, &est.log_value - &exact)
        .exp_m1()
        .abs()
        .to_f64();
    if rel > 1e-12 {
        return Err(format!("S_2(20,7): relative error {rel:e}"));
    }
    Ok(format!("S_2(20,7) to {rel:.1e}"))
}

fn cd_identity(cfg: &RunConfig) -> std::result::Result<String, String> {
    let prec = cfg.precision_bits;
    for &(r, p, q) in &[(1u32, 30u64, 7u64), (2, 50, 24), (3, 100, 10)] {
        let a = cd(r, p, q, prec).map_err(err)?.log_value;
        let b = cd_from_hennecart(r, p, q, prec).map_err(err)?.log_value;
        let d = Float::with_val(prec, &a - &b).abs().to_f64();
        if d > 1e-20 {
            return Err(format!("({r}, {p}, {q}): log difference {d:e}"));
        }
    }
    Ok("3 cells".into())
}

fn saddle_identities(cfg: &RunConfig) -> std::result::Result<String, String> {
    let prec = cfg.precision_bits;
    let limit = Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 16)));
    for r in 1..=6u32 {
        for gap in log_grid(1e-9, 1e6, 12) {
            let x = Float::with_val(prec, r) + Float::with_val(prec, gap);
            let s = solve_saddle(r, &x, &default_tolerance(prec)).map_err(err)?;
            let back = elasticity(r, &s.z0).map_err(err)?;
            if (Float::with_val(prec, &back - &x) / &x).abs() > limit {
                return Err(format!("round trip failed at r = {r}, x = r + {gap:e}"));
            }
        }
    }
    for &(r, p, q) in &[(1u32, 17u64, 5u64), (2, 101, 40), (4, 90, 3), (6, 700, 100)] {
        let z0 = saddle_for(r, p, q, prec).map_err(err)?.z0;
        let lhs = phase_second_derivative(r, p, q, &z0).map_err(err)?;
        let rhs = Float::with_val(prec, curvature_factor(r, &z0).map_err(err)? * (2 * q)) / &z0;
        let rel = (Float::with_val(prec, &lhs - &rhs) / &rhs).abs().to_f64();
        if rel > 1e-20 {
            return Err(format!("Phi'' identity off by {rel:e} at ({r}, {p}, {q})"));
        }
    }
    Ok("72 round trips, 4 identity cells".into())
}

fn q_bounds(cfg: &RunConfig) -> std::result::Result<String, String> {
    let rep = check_q_derivative_bounds(
        &[1, 2, 3, 4, 5, 6],
        &log_grid(1e-6, 1e3, 40),
        cfg.precision_bits,
    )
    .map_err(err)?;
    match rep.verdict {
        Verdict::AllPass => Ok("40 points x 6 values of r".into()),
        v => Err(format!("{v:?}: {:?}", rep.witness)),
    }
}

fn series_routes(cfg: &RunConfig) -> std::result::Result<String, String> {
    let mut verdicts = Vec::new();
    for r in 1..=3 {
        let rep = check_nonneg_coeffs(r, 100, cfg.caps.max_n).map_err(err)?;
        verdicts.push(format!("r{r}:{:?}", rep.verdict));
    }
    Ok(format!("N=100 {}", verdicts.join(" ")))
}

fn scaled_error(cfg: &RunConfig) -> std::result::Result<String, String> {
    let opts = GridOptions {
        precision_bits: cfg.precision_bits,
        caps: cfg.caps,
        large_q: false,
    };
    let grid = full_error_grid(2, 50, &opts).map_err(err)?;
    let m = max_abs_scaled_error(&grid).ok_or("no unflagged cells")?;
    if m < 0.16 {
        Ok(format!("max {m:.5}"))
    } else {
        Err(format!("max {m:.5}"))
    }
}

/// Print one line per check; fails with a consistency error if any check fails.
pub fn run(cfg: &RunConfig) -> Result<String> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check(cfg) {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        return Err(Error::Consistency(format!(
            "{failed} of {} selftest checks failed",
            CHECKS.len()
        )));
    }
    Ok(format!("selftest: all {} checks passed", CHECKS.len()))
}
