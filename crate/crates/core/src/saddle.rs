//! Positive saddle point `z₀ = Q_r^{-1}(x)` with `x = p/q`.
//!
//! `Q_r` increases strictly from `r` to `∞` on `(0, ∞)`, so the inverse exists
//! exactly for `x > r`. The solver is Newton's method on `Q_r(z) − x` inside a
//! sign-change bracket, falling back to bisection whenever a step leaves it.

use rug::Float;

use crate::error::{Error, Result};
use crate::prec::PrecReal;
use crate::specfun::{elasticity, elasticity_prime};

const MAX_ITERATIONS: u32 = 400;
const MAX_BRACKET_EXPANSIONS: u32 = 200;

/// Solved saddle point with diagnostics.
#[derive(Debug, Clone)]
pub struct SaddlePoint {
    pub r: u32,
    /// The target ratio `x = p/q`.
    pub x: PrecReal,
    pub z0: PrecReal,
    /// `|Q_r(z0) − x| / x`.
    pub residual: PrecReal,
    pub iterations: u32,
    /// Set when `x − r` is below `2^{−prec/2}` and `z0 = (r+1)(x−r)` was
    /// returned without iterating.
    pub linearized: bool,
}

impl SaddlePoint {
    /// Checks `Q_r(z0(1−ε)) < x < Q_r(z0(1+ε))`.
    pub fn brackets_root(&self, eps: f64) -> Result<bool> {
        let prec = self.z0.prec();
        let below = Float::with_val(prec, &self.z0 * (1.0 - eps));
        let above = Float::with_val(prec, &self.z0 * (1.0 + eps));
        Ok(elasticity(self.r, &below)? < self.x && self.x < elasticity(self.r, &above)?)
    }
}

/// Default relative tolerance `2^{−(prec−16)}`.
pub fn default_tolerance(prec: u32) -> PrecReal {
    Float::with_val(64, 1u32) >> (prec.saturating_sub(16))
}

/// Starting point: `(r+1)(x−r)` for `x − r < 1`, else `x`.
pub fn initial_guess(r: u32, x: &Float) -> PrecReal {
    let d = Float::with_val(x.prec(), x - r);
    if d < 1u32 {
        d * (r + 1)
    } else {
        x.clone()
    }
}

/// Solve `Q_r(z) = x` at the precision of `x`.
pub fn solve_saddle(r: u32, x: &Float, tol: &Float) -> Result<SaddlePoint> {
    if r < 1 {
        return Err(Error::domain("saddle point requires r ≥ 1"));
    }
    if !x.is_finite() || *x <= r {
        return Err(Error::domain(format!(
            "saddle point exists only for x > r (x = {}, r = {r})",
            x.to_f64()
        )));
    }
    let prec = x.prec();
    let gap = Float::with_val(prec, x - r);
    let linear_limit = Float::with_val(64, 1u32) >> (prec / 2);
    if gap < linear_limit {
        let z0 = Float::with_val(prec, &gap * (r + 1));
        let residual = relative_residual(r, x, &z0)?;
        return Ok(SaddlePoint {
            r,
            x: x.clone(),
            z0,
            residual,
            iterations: 0,
            linearized: true,
        });
    }

    let g = |z: &Float| -> Result<Float> { Ok(Float::with_val(prec, elasticity(r, z)? - x)) };

    let guess = initial_guess(r, x);
    let mut lo = Float::with_val(prec, &guess / 4u32);
    let mut hi = {
        let a = Float::with_val(prec, &guess * 4u32);
        let b = Float::with_val(prec, x + r);
        if a > b {
            a
        } else {
            b
        }
    };
    let mut expansions = 0;
    while g(&lo)? >= 0 {
        lo /= 4u32;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || lo.is_zero() {
            return Err(solver_error("no sign change below the root", &lo, &hi, 0));
        }
    }
    while g(&hi)? <= 0 {
        hi *= 4u32;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || !hi.is_finite() {
            return Err(solver_error("no sign change above the root", &lo, &hi, 0));
        }
    }

    let mut z = if guess > lo && guess < hi {
        guess
    } else {
        midpoint(&lo, &hi)
    };
    for iterations in 0..MAX_ITERATIONS {
        let gz = g(&z)?;
        let residual = Float::with_val(prec, gz.abs_ref()) / x;
        if residual <= *tol {
            return Ok(SaddlePoint {
                r,
                x: x.clone(),
                z0: z,
                residual,
                iterations,
                linearized: false,
            });
        }
        if gz < 0 {
            lo = z.clone();
        } else {
            hi = z.clone();
        }
        let slope = elasticity_prime(r, &z)?;
        let step = Float::with_val(prec, &gz / &slope);
        let newton = Float::with_val(prec, &z - &step);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            midpoint(&lo, &hi)
        };
        if next == z {
            // No representable progress; accept if the bracket is exhausted.
            let residual = relative_residual(r, x, &z)?;
            if residual <= *tol {
                return Ok(SaddlePoint {
                    r,
                    x: x.clone(),
                    z0: z,
                    residual,
                    iterations,
                    linearized: false,
                });
            }
            return Err(solver_error(
                "stalled above tolerance",
                &lo,
                &hi,
                iterations,
            ));
        }
        z = next;
    }
    Err(solver_error(
        "iteration limit reached",
        &lo,
        &hi,
        MAX_ITERATIONS,
    ))
}

/// [`solve_saddle`] at `x = p/q` with the default tolerance.
pub fn saddle_for(r: u32, p: u64, q: u64, prec: u32) -> Result<SaddlePoint> {
    if q < 1 {
        return Err(Error::domain("q must be ≥ 1"));
    }
    let x = Float::with_val(prec, p) / Float::with_val(prec, q);
    solve_saddle(r, &x, &default_tolerance(prec))
}

fn relative_residual(r: u32, x: &Float, z: &Float) -> Result<PrecReal> {
    let q = elasticity(r, z)?;
    Ok(Float::with_val(x.prec(), q - x).abs() / x)
}

/// Arithmetic midpoint, or the geometric one when the bracket spans more
/// than a factor of four.
fn midpoint(lo: &Float, hi: &Float) -> Float {
    let prec = lo.prec();
    if Float::with_val(prec, hi / lo) > 4u32 {
        Float::with_val(prec, lo * hi).sqrt()
    } else {
        Float::with_val(prec, lo + hi) / 2u32
    }
}

fn solver_error(reason: &str, lo: &Float, hi: &Float, iterations: u32) -> Error {
    Error::Solver {
        reason: reason.to_owned(),
        lo: lo.to_f64(),
        hi: hi.to_f64(),
        iterations,
    }
}
