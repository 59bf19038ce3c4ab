//! The truncated exponential `B_r(z) = e^z − Σ_{k<r} z^k/k!` and the
//! quantities built from it.
//!
//! * [`tail_exp`] is `B_r`; `B_r' = B_{r−1}` and `B_r'' = B_{r−2}`, with
//!   `B_0 = B_{−1} = e^z` by the empty-sum convention.
//! * [`elasticity`] is `Q_r(z) = z·B_r'(z)/B_r(z)`, strictly increasing from
//!   `r` (at `0⁺`) to `∞`.
//! * [`curvature_factor`] is `H_r`, with `Φ''(z₀) = 2q·H_r(z₀)/z₀` where
//!   `Φ(z) = −p ln z + q ln B_r(z)` (see [`phase_second_derivative`]).
//!
//! Every real-valued function returns a value at the precision of its
//! argument and internally works with extra guard bits sized to the
//! cancellation the formula suffers near `z = 0` and at large `z`.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::prec::{PrecComplex, PrecReal};

/// Extra bits carried through cancelling expressions in `r` and `z`.
fn guard_bits(r: i64, z: &Float) -> u32 {
    let scale = z.get_exp().map_or(0, |e| e.unsigned_abs());
    let r_bits = 64 - r.unsigned_abs().leading_zeros();
    24 + scale + 2 * r_bits
}

fn check_positive(z: &Float, what: &str) -> Result<()> {
    if z.is_nan() || *z <= 0 {
        return Err(Error::domain(format!("{what} requires z > 0, got {z}")));
    }
    Ok(())
}

fn uses_tail_series(r: i64, abs_z: &Float) -> bool {
    r > 0 && *abs_z < Float::with_val(32, r) / 2u32
}

/// `B_r(z)` for real `z`, at the precision of `z`.
///
/// For `|z| < r/2` the tail `Σ_{k≥r} z^k/k!` is summed directly; elsewhere the
/// polynomial head is subtracted from `e^z` with guard bits.
pub fn tail_exp(r: i64, z: &Float) -> PrecReal {
    let prec = z.prec();
    let work = prec + guard_bits(r, z);
    let zw = Float::with_val(work, z);
    let value = if uses_tail_series(r, &Float::with_val(32, z.abs_ref())) {
        tail_series_real(r as u64, &zw)
    } else {
        subtract_head_real(r, &zw)
    };
    Float::with_val(prec, value)
}

/// `B_r(z)` evaluated as `e^z − Σ_{k<r} z^k/k!` at the precision of `z`, with
/// no switch to the tail series. Exposed as an independent route for
/// cross-checks.
pub fn tail_exp_by_subtraction(r: i64, z: &Float) -> PrecReal {
    subtract_head_real(r, z)
}

fn tail_series_real(r: u64, z: &Float) -> Float {
    let prec = z.prec();
    // z^r / r!
    let mut term = Float::with_val(prec, z.pow(r as u32));
    term /= Float::with_val(prec, Float::factorial(r as u32));
    let mut sum = term.clone();
    let mut k = r;
    loop {
        k += 1;
        term *= z;
        term /= k;
        sum += &term;
        if term.is_zero() {
            break;
        }
        let ratio = Float::with_val(32, &term / &sum).abs();
        if ratio.get_exp().is_some_and(|e| e < -(prec as i32) - 8) {
            break;
        }
    }
    sum
}

fn subtract_head_real(r: i64, z: &Float) -> Float {
    let prec = z.prec();
    let mut value = Float::with_val(prec, z.exp_ref());
    if r > 0 {
        let mut term = Float::with_val(prec, 1);
        for k in 0..r as u64 {
            if k > 0 {
                term *= z;
                term /= k;
            }
            value -= &term;
        }
    }
    value
}

/// `B_r(z)` for complex `z`, at the precision of `z`.
pub fn tail_exp_complex(r: i64, z: &PrecComplex) -> PrecComplex {
    let prec = z.prec();
    let modulus = z.abs();
    let work = prec + guard_bits(r, &modulus) + 8 + 2 * r.max(0) as u32;
    let zw = z.clone().with_prec(work);
    let value = if uses_tail_series(r, &modulus) {
        tail_series_complex(r as u64, &zw)
    } else {
        subtract_head_complex(r, &zw)
    };
    value.with_prec(prec)
}

/// Complex counterpart of [`tail_exp_by_subtraction`].
pub fn tail_exp_complex_by_subtraction(r: i64, z: &PrecComplex) -> PrecComplex {
    subtract_head_complex(r, z)
}

fn tail_series_complex(r: u64, z: &PrecComplex) -> PrecComplex {
    let prec = z.prec();
    let fact = Float::with_val(prec, Float::factorial(r as u32));
    let mut term = z.pow_u(r).scale(&Float::with_val(prec, fact.recip_ref()));
    let mut sum = term.clone();
    let mut k = r;
    loop {
        k += 1;
        term = (&term * z).div_u(k);
        sum = &sum + &term;
        let t = term.abs();
        if t.is_zero() {
            break;
        }
        let s = sum.abs();
        if s.is_zero() {
            continue;
        }
        let ratio = Float::with_val(32, &t / &s);
        if ratio.get_exp().is_some_and(|e| e < -(prec as i32) - 8) {
            break;
        }
    }
    sum
}

fn subtract_head_complex(r: i64, z: &PrecComplex) -> PrecComplex {
    let prec = z.prec();
    let mut value = z.exp();
    if r > 0 {
        let mut term = PrecComplex::one(prec);
        for k in 0..r as u64 {
            if k > 0 {
                term = (&term * z).div_u(k);
            }
            value = &value - &term;
        }
    }
    value
}

/// `ln B_r(z)` for `z > 0`.
pub fn ln_tail_exp(r: i64, z: &Float) -> Result<PrecReal> {
    check_positive(z, "ln B_r")?;
    let prec = z.prec();
    let zw = Float::with_val(prec + 16, z);
    Ok(Float::with_val(prec, tail_exp(r, &zw).ln()))
}

/// `Q_r(z) = z·B_{r−1}(z)/B_r(z)` for `z > 0`.
pub fn elasticity(r: u32, z: &Float) -> Result<PrecReal> {
    check_positive(z, "Q_r")?;
    let r = i64::from(r);
    let work = z.prec() + guard_bits(r, z);
    let zw = Float::with_val(work, z);
    let b = tail_exp(r, &zw);
    let b1 = tail_exp(r - 1, &zw);
    let q = Float::with_val(work, &zw * &b1) / &b;
    Ok(Float::with_val(z.prec(), q))
}

/// `Q_r'(z) = B'/B + z·B''/B − z·(B'/B)²`, using `B' = B_{r−1}`, `B'' = B_{r−2}`.
pub fn elasticity_prime(r: u32, z: &Float) -> Result<PrecReal> {
    check_positive(z, "Q_r'")?;
    let r = i64::from(r);
    let work = z.prec() + guard_bits(r, z);
    let zw = Float::with_val(work, z);
    let b = tail_exp(r, &zw);
    let d1 = Float::with_val(work, tail_exp(r - 1, &zw) / &b);
    let d2 = Float::with_val(work, tail_exp(r - 2, &zw) / &b);
    let mut out = d1.clone();
    out += Float::with_val(work, &zw * &d2);
    out -= Float::with_val(work, &zw * Float::with_val(work, d1.square_ref()));
    Ok(Float::with_val(z.prec(), out))
}

/// Central finite-difference estimate of `Q_r'(z)` with step
/// `h = 2^{−prec/3}·max(z, 1)`. Independent of [`elasticity_prime`].
pub fn elasticity_prime_fd(r: u32, z: &Float) -> Result<PrecReal> {
    check_positive(z, "Q_r' (finite difference)")?;
    let prec = z.prec();
    let work = prec + 32;
    let zw = Float::with_val(work, z);
    let mut h = Float::with_val(work, 1u32) >> (prec / 3);
    if zw > 1 {
        h *= &zw;
    }
    // keep z − h inside the domain
    let half = Float::with_val(work, &zw / 2u32);
    if h > half {
        h = half;
    }
    let hi = Float::with_val(work, &zw + &h);
    let lo = Float::with_val(work, &zw - &h);
    let diff = Float::with_val(work, elasticity(r, &hi)? - elasticity(r, &lo)?);
    let two_h = Float::with_val(work, &h * 2u32);
    Ok(Float::with_val(prec, diff / two_h))
}

/// `H_r(z) = (B_{r−1}B_r + z·B_{r−2}B_r − z·B_{r−1}²) / (2·B_r²)` for `z > 0`.
pub fn curvature_factor(r: u32, z: &Float) -> Result<PrecReal> {
    check_positive(z, "H_r")?;
    let r = i64::from(r);
    let work = z.prec() + guard_bits(r, z);
    let zw = Float::with_val(work, z);
    let b0 = tail_exp(r, &zw);
    let b1 = tail_exp(r - 1, &zw);
    let b2 = tail_exp(r - 2, &zw);
    let mut num = Float::with_val(work, &b1 * &b0);
    num += Float::with_val(work, &zw * &b2) * &b0;
    num -= Float::with_val(work, &zw * Float::with_val(work, b1.square_ref()));
    let den = Float::with_val(work, b0.square_ref()) * 2u32;
    Ok(Float::with_val(z.prec(), num / den))
}

/// `Φ''(z) = p/z² + q·B_r''/B_r − q·(B_r'/B_r)²` for `Φ(z) = −p ln z + q ln B_r(z)`.
pub fn phase_second_derivative(r: u32, p: u64, q: u64, z: &Float) -> Result<PrecReal> {
    check_positive(z, "Φ''")?;
    if p < 1 || q < 1 {
        return Err(Error::domain(format!(
            "Φ'' requires p ≥ 1 and q ≥ 1, got p = {p}, q = {q}"
        )));
    }
    let r = i64::from(r);
    let qbits = 64 - q.leading_zeros();
    let work = z.prec() + guard_bits(r, z) + qbits;
    let zw = Float::with_val(work, z);
    let b = tail_exp(r, &zw);
    let d1 = Float::with_val(work, tail_exp(r - 1, &zw) / &b);
    let d2 = Float::with_val(work, tail_exp(r - 2, &zw) / &b);
    let mut out = Float::with_val(work, p) / Float::with_val(work, zw.square_ref());
    out += Float::with_val(work, &d2 * q);
    out -= Float::with_val(work, d1.square_ref()) * q;
    Ok(Float::with_val(z.prec(), out))
}

/// Truncated power series with exact rational coefficients `c_0..=c_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeries {
    coefficients: Vec<Rational>,
}

impl RationalSeries {
    /// Series with the given coefficients; truncation order is `len − 1`.
    pub fn new(coefficients: Vec<Rational>) -> Self {
        assert!(!coefficients.is_empty(), "series needs at least c_0");
        RationalSeries { coefficients }
    }

    pub fn zero(order: usize) -> Self {
        RationalSeries {
            coefficients: vec![Rational::new(); order + 1],
        }
    }

    pub fn truncation_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn coefficient(&self, n: usize) -> &Rational {
        &self.coefficients[n]
    }

    /// `e^{c·x}` to order `order`.
    pub fn exp_linear(c: &Rational, order: usize) -> Self {
        let mut coefficients = Vec::with_capacity(order + 1);
        let mut term = Rational::from(1);
        coefficients.push(term.clone());
        for n in 1..=order {
            term *= c;
            term /= n as u32;
            coefficients.push(term.clone());
        }
        RationalSeries { coefficients }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.truncation_order().min(other.truncation_order());
        let coefficients = (0..=order)
            .map(|n| Rational::from(&self.coefficients[n] + &other.coefficients[n]))
            .collect();
        RationalSeries { coefficients }
    }

    /// Cauchy product truncated to the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.truncation_order().min(other.truncation_order());
        let mut coefficients = vec![Rational::new(); order + 1];
        for (i, a) in self.coefficients.iter().enumerate().take(order + 1) {
            if a.cmp0().is_eq() {
                continue;
            }
            for (j, b) in other.coefficients.iter().enumerate().take(order + 1 - i) {
                coefficients[i + j] += Rational::from(a * b);
            }
        }
        RationalSeries { coefficients }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        RationalSeries {
            coefficients: self
                .coefficients
                .iter()
                .map(|c| Rational::from(c * factor))
                .collect(),
        }
    }

    /// Index of the first strictly negative coefficient, if any.
    pub fn first_negative(&self) -> Option<usize> {
        self.coefficients.iter().position(|c| c.cmp0().is_lt())
    }
}

fn inverse_factorials(order: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = Integer::from(1);
    for k in 0..=order {
        if k > 0 {
            fact *= k as u32;
        }
        out.push(Rational::from((Integer::from(1), fact.clone())));
    }
    out
}

/// Maclaurin series of `B_r(x)`: `c_n = 1/n!` for `n ≥ r`, zero below.
pub fn series_tail_exp(r: u32, order: usize, cap: usize) -> Result<RationalSeries> {
    check_order(order, cap)?;
    let mut coefficients = inverse_factorials(order);
    for c in coefficients.iter_mut().take(r as usize) {
        *c = Rational::new();
    }
    Ok(RationalSeries { coefficients })
}

/// Maclaurin series of `e^{−x/(r+1)}·B_r(x)` by the closed-form coefficient
/// sum `c_n = Σ_{k=r}^{n} (1/k!)·(−1/(r+1))^{n−k}/(n−k)!`.
pub fn series_damped_tail_exp(r: u32, order: usize, cap: usize) -> Result<RationalSeries> {
    check_order(order, cap)?;
    let inv_fact = inverse_factorials(order);
    let damping = Rational::from((-1, r as i64 + 1));
    // powers[j] = (−1/(r+1))^j / j!
    let mut powers = Vec::with_capacity(order + 1);
    let mut pw = Rational::from(1);
    for (j, f) in inv_fact.iter().enumerate() {
        if j > 0 {
            pw *= &damping;
        }
        powers.push(Rational::from(&pw * f));
    }
    let coefficients = (0..=order)
        .map(|n| {
            let mut c = Rational::new();
            for k in (r as usize)..=n {
                c += Rational::from(&inv_fact[k] * &powers[n - k]);
            }
            c
        })
        .collect();
    Ok(RationalSeries { coefficients })
}

/// Same series as [`series_damped_tail_exp`] via the Cauchy product
/// `series(B_r) × series(e^{−x/(r+1)})`.
pub fn series_damped_tail_exp_by_product(
    r: u32,
    order: usize,
    cap: usize,
) -> Result<RationalSeries> {
    let tail = series_tail_exp(r, order, cap)?;
    let damp = RationalSeries::exp_linear(&Rational::from((-1, r as i64 + 1)), order);
    Ok(tail.mul(&damp))
}

fn check_order(order: usize, cap: usize) -> Result<()> {
    if order < 1 {
        return Err(Error::domain("series order N must be ≥ 1"));
    }
    if order > cap {
        return Err(Error::Capacity {
            what: "series order N",
            requested: order as u64,
            cap: cap as u64,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prec::real;

    const CAP: usize = 10_000;

    fn e(prec: u32) -> Float {
        Float::with_val(prec, 1).exp()
    }

    fn rel(a: &Float, b: &Float) -> f64 {
        Float::with_val(a.prec(), a - b).abs().to_f64() / b.clone().abs().to_f64()
    }

    #[test]
    fn tail_exp_small_examples() {
        assert!(tail_exp(1, &real(128, 0.0)).is_zero());
        let b = tail_exp(2, &real(128, 1e-8));
        assert!((b.to_f64() / 5e-17 - 1.0).abs() < 1e-8);
        let reference = tail_exp_by_subtraction(2, &real(1024, 1e-8));
        assert!(rel(&b, &Float::with_val(128, reference)) < 1e-36);
        let b1 = tail_exp(1, &real(128, 1.0));
        let expected = e(128) - 1u32;
        assert!(rel(&b1, &expected) < 1e-37);
    }

    #[test]
    fn tail_exp_nonpositive_r_is_exp() {
        let z = real(128, 0.3);
        assert_eq!(tail_exp(0, &z), Float::with_val(128, z.exp_ref()));
        assert_eq!(tail_exp(-1, &z), Float::with_val(128, z.exp_ref()));
    }

    #[test]
    fn complex_matches_real_on_axis() {
        for r in 1..=5i64 {
            for &x in &[0.01, 0.4, 1.7, 9.0] {
                let re = tail_exp(r, &real(160, x));
                let c = tail_exp_complex(r, &PrecComplex::with_val(160, x, 0.0));
                assert!(rel(&c.re, &re) < 1e-40, "r = {r}, x = {x}");
                assert!(c.im.is_zero() || c.im.clone().abs() < 1e-45);
            }
        }
    }

    #[test]
    fn elasticity_examples() {
        let prec = 128;
        let q = elasticity(1, &real(prec, 1.0)).unwrap();
        let e = e(prec);
        let expected = Float::with_val(prec, &e / Float::with_val(prec, &e - 1u32));
        assert!(rel(&q, &expected) < 1e-36);
        assert!((expected.to_f64() - 1.5819767068693265).abs() < 1e-15);

        for r in 1..=6u32 {
            let z = real(prec, 1e-7);
            let q = elasticity(r, &z).unwrap();
            let lin = f64::from(r) + 1e-7 / f64::from(r + 1);
            assert!((q.to_f64() - lin).abs() < 1e-13, "r = {r}");
        }

        let q = elasticity(1, &real(prec, 100.0)).unwrap();
        assert!((q.to_f64() - 100.0).abs() < 1e-30);
    }

    #[test]
    fn elasticity_rejects_nonpositive() {
        assert!(matches!(
            elasticity(2, &real(64, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            elasticity(2, &real(64, -1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            curvature_factor(2, &real(64, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            elasticity_prime(2, &real(64, -3.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn elasticity_prime_examples() {
        let prec = 128;
        let d = elasticity_prime(1, &real(prec, 1e-9)).unwrap();
        assert!((d.to_f64() - 0.5).abs() < 1e-8);
        let z = real(prec, 1.0);
        let d = elasticity_prime(2, &z).unwrap();
        assert!(d.to_f64() >= 1.0 / 3.0 && d.to_f64() <= 1.0);
        let fd = elasticity_prime_fd(2, &z).unwrap();
        assert!(rel(&d, &fd) < 1e-20);
        let d = elasticity_prime(1, &real(prec, 50.0)).unwrap();
        assert!((d.to_f64() - 1.0).abs() < 1e-18);
    }

    #[test]
    fn curvature_factor_r1_at_one() {
        let prec = 128;
        let h = curvature_factor(1, &real(prec, 1.0)).unwrap();
        // (e² − 2e) / (2(e − 1)²)
        let e = e(prec);
        let num = Float::with_val(prec, e.square_ref()) - Float::with_val(prec, &e * 2u32);
        let den = Float::with_val(prec, Float::with_val(prec, &e - 1u32).square_ref()) * 2u32;
        let expected = num / den;
        assert!(rel(&h, &expected) < 1e-36);
        assert!((h.to_f64() - 0.330_651_556_330_767_05).abs() < 1e-15);
    }

    #[test]
    fn phase_curvature_identity() {
        let prec = 128;
        let z = real(prec, 3.0);
        for &(p, q) in &[(10u64, 2u64), (50, 20), (7, 3)] {
            let phi = phase_second_derivative(2, p, q, &z).unwrap();
            let h = curvature_factor(2, &z).unwrap();
            // Φ'' − 2qH/z = (p − q·Q_r(z))/z²... only zero at the saddle; check
            // the general relation Φ'' = p/z² − q·Q/z² + 2qH/z instead.
            let qv = elasticity(2, &z).unwrap();
            let rhs = Float::with_val(prec, p) / Float::with_val(prec, z.square_ref())
                - Float::with_val(prec, &qv * q) / Float::with_val(prec, z.square_ref())
                + Float::with_val(prec, &h * (2 * q)) / &z;
            assert!(rel(&phi, &rhs) < 1e-30, "p = {p}, q = {q}");
        }
    }

    #[test]
    fn series_damped_r1_is_two_sinh_half() {
        let s = series_damped_tail_exp(1, 6, CAP).unwrap();
        let expected = [
            Rational::from(0),
            Rational::from(1),
            Rational::from(0),
            Rational::from((1, 24)),
            Rational::from(0),
            Rational::from((1, 1920)),
            Rational::from(0),
        ];
        assert_eq!(s.coefficients(), &expected);
    }

    #[test]
    fn series_damped_r2_low_order() {
        let s = series_damped_tail_exp(2, 3, CAP).unwrap();
        assert_eq!(s.coefficient(0), &Rational::from(0));
        assert_eq!(s.coefficient(1), &Rational::from(0));
        assert_eq!(s.coefficient(2), &Rational::from((1, 2)));
        assert_eq!(s.coefficient(3), &Rational::from(0));
    }

    #[test]
    fn series_leading_zeros_and_cap() {
        for r in 1..=6u32 {
            let s = series_tail_exp(r, 12, CAP).unwrap();
            for n in 0..r as usize {
                assert_eq!(s.coefficient(n), &Rational::new());
            }
            assert_eq!(
                s.coefficient(r as usize),
                &Rational::from((Integer::from(1), Integer::factorial(r)))
            );
        }
        assert!(matches!(
            series_tail_exp(2, 50, 10),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(series_tail_exp(2, 0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn damped_series_two_routes_agree() {
        for r in 1..=5u32 {
            let a = series_damped_tail_exp(r, 60, CAP).unwrap();
            let b = series_damped_tail_exp_by_product(r, 60, CAP).unwrap();
            assert_eq!(a, b, "r = {r}");
        }
    }

    #[test]
    fn product_truncates_to_smaller_order() {
        let a = RationalSeries::exp_linear(&Rational::from(1), 5);
        let b = RationalSeries::exp_linear(&Rational::from(-1), 8);
        let p = a.mul(&b);
        assert_eq!(p.truncation_order(), 5);
        assert_eq!(p.coefficient(0), &Rational::from(1));
        for n in 1..=5 {
            assert_eq!(p.coefficient(n), &Rational::new());
        }
        assert_eq!(a.add(&b).truncation_order(), 5);
    }
}
