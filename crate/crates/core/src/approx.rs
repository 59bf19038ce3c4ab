//! Asymptotic formulas for `S_r(p, q)`, all evaluated as natural logs.
//!
//! With `a = p − rq` and `z₀ = Q_r^{-1}(p/q)`:
//!
//! * Hennecart: `F_r = p!/(q!·a!)·(a/e)^a·B_r(z₀)^q/z₀^{p+1}·√(a/Φ''(z₀))`
//! * CD: `C_r = F_r·a!/(√(2πa)(a/e)^a) = p!·B_r(z₀)^q / (2·q!·z₀^p·√(qπ·z₀·H_r(z₀)))`
//! * large q: `W_r = (rq+a)!/(a!·q!·(r!)^q)·(q/(r+1))^a`

use std::fmt;
use std::sync::Mutex;
use std::sync::OnceLock;

use rug::float::Constant;
use rug::{Float, Integer, Rational};

use crate::bigcomb::{factorial, log_of_count, ExactCount};
use crate::error::{Error, Result};
use crate::prec::PrecReal;
use crate::saddle::{saddle_for, SaddlePoint};
use crate::specfun::{curvature_factor, ln_tail_exp, phase_second_derivative};

/// Above this argument `ln n!` comes from the Stirling series instead of an
/// exact factorial.
pub const LOG_GAMMA_SWITCHOVER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    Hennecart,
    Cd,
    LargeQ,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::Hennecart => "hennecart",
            Formula::Cd => "cd",
            Formula::LargeQ => "largeq",
        })
    }
}

/// One evaluated approximation.
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub formula: Formula,
    /// Natural log of the approximation.
    pub log_value: PrecReal,
    pub r: u32,
    pub p: u64,
    pub q: u64,
    /// Absent for [`Formula::LargeQ`].
    pub z0: Option<PrecReal>,
    /// `t₀ = (p − rq)/q`.
    pub t0: PrecReal,
}

/// `ln n!`: exact factorial for `n ≤ 10⁶`, Stirling series above.
pub fn ln_factorial(n: u64, prec: u32) -> PrecReal {
    if n <= LOG_GAMMA_SWITCHOVER {
        ln_factorial_exact(n, prec)
    } else {
        ln_factorial_series(n, prec)
    }
}

/// `ln n!` from the exact big-integer factorial.
pub fn ln_factorial_exact(n: u64, prec: u32) -> PrecReal {
    if n < 2 {
        return Float::new(prec);
    }
    let f = ExactCount::new(factorial(n)).expect("factorials are positive");
    log_of_count(&f, prec).expect("factorials are positive")
}

/// `ln n! = n ln n − n + ½ ln(2πn) + Σ_k B_{2k}/(2k(2k−1)n^{2k−1})`, truncated
/// once terms stop decreasing or drop below the working precision.
///
/// Only accurate to full precision for large `n` (the series is asymptotic);
/// at `n = 1000` it reaches well beyond 256 bits.
pub fn ln_factorial_series(n: u64, prec: u32) -> PrecReal {
    assert!(n >= 1, "Stirling series needs n ≥ 1");
    let work = prec + 32;
    let nf = Float::with_val(work, n);
    let ln_n = Float::with_val(work, nf.ln_ref());
    let mut sum = Float::with_val(work, &nf * &ln_n) - &nf;
    let two_pi_n = Float::with_val(work, Constant::Pi) * 2u32 * &nf;
    sum += Float::with_val(work, two_pi_n.ln_ref()) / 2u32;

    let inv_n2 = Float::with_val(work, nf.square_ref()).recip();
    let mut n_pow = Float::with_val(work, nf.recip_ref()); // n^{-(2k-1)}
    let mut previous: Option<Float> = None;
    let limit = Float::with_val(64, 1u32) >> (work + 8);
    for k in 1u32.. {
        let b2k = bernoulli(2 * k);
        let denom = 2 * k * (2 * k - 1);
        let term = Float::with_val(work, &b2k) / denom * &n_pow;
        let size = Float::with_val(64, term.abs_ref());
        if previous.as_ref().is_some_and(|prev| size >= *prev) {
            break;
        }
        sum += &term;
        if size < Float::with_val(64, sum.abs_ref()) * &limit {
            break;
        }
        previous = Some(size);
        n_pow *= &inv_n2;
    }
    Float::with_val(prec, sum)
}

/// Bernoulli number `B_m` (with `B_1 = −1/2`), cached.
fn bernoulli(m: u32) -> Rational {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Rational::from(1)]));
    let mut b = cache.lock().expect("bernoulli cache poisoned");
    // Σ_{j=0}^{m} C(m+1, j) B_j = 0
    while b.len() <= m as usize {
        let next = b.len() as u32;
        let mut acc = Rational::new();
        for (j, bj) in b.iter().enumerate() {
            let c = Integer::from(Integer::binomial_u(next + 1, j as u32));
            acc += Rational::from(bj * &c);
        }
        acc /= next + 1;
        b.push(-acc);
    }
    b[m as usize].clone()
}

/// `ln[n!/(√(2πn)(n/e)^n)]`, the log of the ratio `C_r/F_r` at `n = p − rq`.
pub fn ln_stirling_correction(n: u64, prec: u32) -> Result<PrecReal> {
    if n < 1 {
        return Err(Error::domain("Stirling correction needs n ≥ 1"));
    }
    let work = prec + 32;
    let nf = Float::with_val(work, n);
    let mut out = Float::with_val(work, ln_factorial(n, work));
    out -= Float::with_val(work, Float::with_val(work, Constant::Pi) * 2u32 * &nf).ln() / 2u32;
    out -= nf_ln_n_minus_n(&nf);
    Ok(Float::with_val(prec, out))
}

/// `n(ln n − 1)`.
fn nf_ln_n_minus_n(nf: &Float) -> Float {
    let prec = nf.prec();
    (Float::with_val(prec, nf.ln_ref()) - 1u32) * nf
}

/// `C_r/F_r = n!/(√(2πn)(n/e)^n)` as a real number.
pub fn stirling_correction(n: u64, prec: u32) -> Result<PrecReal> {
    Ok(ln_stirling_correction(n, prec)?.exp())
}

fn interior_domain(r: u32, p: u64, q: u64) -> Result<u64> {
    let rq = u64::from(r) * q;
    if r < 1 || q < 1 {
        return Err(Error::domain(format!(
            "need r ≥ 1 and q ≥ 1 (r = {r}, q = {q})"
        )));
    }
    if p < rq {
        return Err(Error::domain(format!("q = {q} exceeds p/r = {p}/{r}")));
    }
    if p == rq {
        return Err(Error::domain(format!(
            "p = rq = {p}: the saddle point and t₀ degenerate; use the large-q formula"
        )));
    }
    Ok(p - rq)
}

struct SaddleTerms {
    saddle: SaddlePoint,
    ln_b: Float,
    ln_z: Float,
}

fn saddle_terms(r: u32, p: u64, q: u64, work: u32) -> Result<SaddleTerms> {
    let saddle = saddle_for(r, p, q, work)?;
    let ln_b = ln_tail_exp(i64::from(r), &saddle.z0)?;
    let ln_z = Float::with_val(work, saddle.z0.ln_ref());
    Ok(SaddleTerms { saddle, ln_b, ln_z })
}

/// Hennecart's approximation `F_r(p, q)`; requires `1 ≤ q < p/r`.
pub fn hennecart(r: u32, p: u64, q: u64, prec: u32) -> Result<ApproxResult> {
    let a = interior_domain(r, p, q)?;
    let work = prec + 32;
    let terms = saddle_terms(r, p, q, work)?;
    let z0 = &terms.saddle.z0;
    let phi_dd = phase_second_derivative(r, p, q, z0)?;
    if phi_dd <= 0 {
        return Err(Error::Consistency(format!(
            "Φ''(z₀) = {} is not positive at the saddle (r = {r}, p = {p}, q = {q})",
            phi_dd.to_f64()
        )));
    }
    let af = Float::with_val(work, a);
    let mut log = ln_factorial(p, work);
    log -= ln_factorial(q, work);
    log -= ln_factorial(a, work);
    log += nf_ln_n_minus_n(&af);
    log += Float::with_val(work, &terms.ln_b * q);
    log -= Float::with_val(work, &terms.ln_z * (p + 1));
    log += Float::with_val(work, (af / &phi_dd).ln()) / 2u32;
    Ok(ApproxResult {
        formula: Formula::Hennecart,
        log_value: Float::with_val(prec, log),
        r,
        p,
        q,
        z0: Some(Float::with_val(prec, z0)),
        t0: Float::with_val(prec, a) / q,
    })
}

/// CD approximation `C_r(p, q)` from its closed form; requires `1 ≤ q < p/r`.
pub fn cd(r: u32, p: u64, q: u64, prec: u32) -> Result<ApproxResult> {
    let a = interior_domain(r, p, q)?;
    let work = prec + 32;
    let terms = saddle_terms(r, p, q, work)?;
    let z0 = &terms.saddle.z0;
    let h = curvature_factor(r, z0)?;
    let mut log = ln_factorial(p, work);
    log += Float::with_val(work, &terms.ln_b * q);
    log -= Float::with_val(work, Constant::Log2);
    log -= ln_factorial(q, work);
    log -= Float::with_val(work, &terms.ln_z * p);
    let inner = Float::with_val(work, Constant::Pi) * q * z0 * &h;
    log -= Float::with_val(work, inner.ln()) / 2u32;
    Ok(ApproxResult {
        formula: Formula::Cd,
        log_value: Float::with_val(prec, log),
        r,
        p,
        q,
        z0: Some(Float::with_val(prec, z0)),
        t0: Float::with_val(prec, a) / q,
    })
}

/// `C_r` through its definition `F_r · a!/(√(2πa)(a/e)^a)`.
pub fn cd_from_hennecart(r: u32, p: u64, q: u64, prec: u32) -> Result<ApproxResult> {
    let work = prec + 32;
    let f = hennecart(r, p, q, work)?;
    let a = p - u64::from(r) * q;
    let log = f.log_value + ln_stirling_correction(a, work)?;
    Ok(ApproxResult {
        formula: Formula::Cd,
        log_value: Float::with_val(prec, log),
        z0: f.z0.map(|z| Float::with_val(prec, z)),
        t0: Float::with_val(prec, f.t0),
        ..f
    })
}

/// Large-q formula `W_r(rq + a, q)`.
pub fn large_q(r: u32, q: u64, a: u64, prec: u32) -> Result<ApproxResult> {
    if r < 1 || q < 1 {
        return Err(Error::domain(format!(
            "need r ≥ 1 and q ≥ 1 (r = {r}, q = {q})"
        )));
    }
    let work = prec + 32;
    let rq = u64::from(r) * q;
    let p = rq + a;
    let mut log = ln_factorial(p, work);
    log -= ln_factorial(a, work);
    log -= ln_factorial(q, work);
    log -= ln_factorial(u64::from(r), work) * q;
    if a > 0 {
        let ratio = Float::with_val(work, q) / (r + 1);
        log += Float::with_val(work, ratio.ln()) * a;
    }
    Ok(ApproxResult {
        formula: Formula::LargeQ,
        log_value: Float::with_val(prec, log),
        r,
        p,
        q,
        z0: None,
        t0: Float::with_val(prec, a) / q,
    })
}

/// Dispatch by formula; `LargeQ` takes `a = p − rq`.
pub fn evaluate(formula: Formula, r: u32, p: u64, q: u64, prec: u32) -> Result<ApproxResult> {
    match formula {
        Formula::Hennecart => hennecart(r, p, q, prec),
        Formula::Cd => cd(r, p, q, prec),
        Formula::LargeQ => {
            let rq = u64::from(r) * q;
            if p < rq {
                return Err(Error::domain(format!("q = {q} exceeds p/r = {p}/{r}")));
            }
            large_q(r, q, p - rq, prec)
        }
    }
}

/// `exp(log_approx − log_exact) − 1`.
pub fn relative_error(log_approx: &Float, log_exact: &Float) -> PrecReal {
    let prec = log_approx.prec().min(log_exact.prec());
    Float::with_val(prec, log_approx - log_exact).exp_m1()
}
