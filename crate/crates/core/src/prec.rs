//! Arbitrary-precision real and complex carriers.
//!
//! Reals are MPFR floats (via `rug`), each carrying its own mantissa width.
//! Operations that combine several inputs work at the smallest of their
//! precisions. Complex values are a plain `(re, im)` pair of reals; only the
//! handful of operations needed for contour sums and zero scans are provided.

use std::ops::{Add, Mul, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float};

/// Real number with a configurable mantissa width in bits.
pub type PrecReal = Float;

/// Default working precision for asymptotic evaluation.
pub const DEFAULT_PRECISION: u32 = 128;

pub fn real(prec: u32, value: f64) -> PrecReal {
    Float::with_val(prec, value)
}

pub fn real_from_u64(prec: u32, value: u64) -> PrecReal {
    Float::with_val(prec, value)
}

pub fn pi(prec: u32) -> PrecReal {
    Float::with_val(prec, Constant::Pi)
}

/// Smallest precision among the operands.
pub fn min_prec(values: &[&Float]) -> u32 {
    values
        .iter()
        .map(|v| v.prec())
        .min()
        .unwrap_or(DEFAULT_PRECISION)
}

/// Scientific notation with 17 significant digits, e.g. `-1.2345678901234567e-3`.
pub fn fmt_sci17(value: &Float) -> String {
    fmt_f64_sci17(value.to_f64())
}

pub fn fmt_f64_sci17(value: f64) -> String {
    if value.is_nan() {
        return "NaN".to_owned();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    format!("{value:.16e}")
}

/// Complex number as a pair of [`PrecReal`] components.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecComplex {
    pub re: PrecReal,
    pub im: PrecReal,
}

impl PrecComplex {
    pub fn new(re: PrecReal, im: PrecReal) -> Self {
        PrecComplex { re, im }
    }

    pub fn from_real(re: PrecReal) -> Self {
        let im = Float::new(re.prec());
        PrecComplex { re, im }
    }

    pub fn with_val(prec: u32, re: f64, im: f64) -> Self {
        PrecComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::with_val(prec, 1.0, 0.0)
    }

    /// `modulus · e^{i·angle}`.
    pub fn from_polar(modulus: &Float, angle: &Float) -> Self {
        let prec = min_prec(&[modulus, angle]);
        let (sin, cos) = Float::with_val(prec, angle).sin_cos(Float::new(prec));
        PrecComplex {
            re: Float::with_val(prec, modulus * &cos),
            im: Float::with_val(prec, modulus * &sin),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().min(self.im.prec())
    }

    pub fn set_prec(&mut self, prec: u32) {
        self.re.set_prec(prec);
        self.im.set_prec(prec);
    }

    pub fn with_prec(mut self, prec: u32) -> Self {
        self.set_prec(prec);
        self
    }

    pub fn abs(&self) -> PrecReal {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn scale(&self, factor: &Float) -> Self {
        let prec = self.prec().min(factor.prec());
        PrecComplex {
            re: Float::with_val(prec, &self.re * factor),
            im: Float::with_val(prec, &self.im * factor),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Integer power by repeated squaring.
    pub fn pow_u(&self, mut exponent: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.prec());
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = &acc * &base;
            }
            exponent >>= 1;
            if exponent > 0 {
                base = base.square();
            }
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec();
        let modulus = Float::with_val(prec, self.re.exp_ref());
        Self::from_polar(&modulus, &self.im)
    }

    /// Divide by a positive integer.
    pub fn div_u(&self, divisor: u64) -> Self {
        let prec = self.prec();
        PrecComplex {
            re: Float::with_val(prec, &self.re / divisor),
            im: Float::with_val(prec, &self.im / divisor),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<'a> Add<&'a PrecComplex> for &'a PrecComplex {
    type Output = PrecComplex;
    fn add(self, rhs: &'a PrecComplex) -> PrecComplex {
        let prec = self.prec().min(rhs.prec());
        PrecComplex {
            re: Float::with_val(prec, &self.re + &rhs.re),
            im: Float::with_val(prec, &self.im + &rhs.im),
        }
    }
}

impl<'a> Sub<&'a PrecComplex> for &'a PrecComplex {
    type Output = PrecComplex;
    fn sub(self, rhs: &'a PrecComplex) -> PrecComplex {
        let prec = self.prec().min(rhs.prec());
        PrecComplex {
            re: Float::with_val(prec, &self.re - &rhs.re),
            im: Float::with_val(prec, &self.im - &rhs.im),
        }
    }
}

impl<'a> Mul<&'a PrecComplex> for &'a PrecComplex {
    type Output = PrecComplex;
    fn mul(self, rhs: &'a PrecComplex) -> PrecComplex {
        let prec = self.prec().min(rhs.prec());
        let mut re = Float::with_val(prec, &self.re * &rhs.re);
        re -= Float::with_val(prec, &self.im * &rhs.im);
        let mut im = Float::with_val(prec, &self.re * &rhs.im);
        im += Float::with_val(prec, &self.im * &rhs.re);
        PrecComplex { re, im }
    }
}

/// `x^n` for a real base and non-negative integer exponent.
pub fn powi(x: &Float, n: u32) -> Float {
    let mut out = Float::new(x.prec());
    out.assign(x.pow(n));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci17_format() {
        assert_eq!(fmt_f64_sci17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64_sci17(-0.00125), "-1.2500000000000000e-3");
        let parsed: f64 = fmt_f64_sci17(std::f64::consts::PI).parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn complex_power_matches_polar_form() {
        let prec = 192;
        let modulus = real(prec, 1.3);
        let angle = real(prec, 0.7);
        let z = PrecComplex::from_polar(&modulus, &angle);
        let z7 = z.pow_u(7);
        let expected = PrecComplex::from_polar(
            &Float::with_val(prec, modulus.pow(7u32)),
            &Float::with_val(prec, &angle * 7u32),
        );
        let diff = (&z7 - &expected).abs();
        assert!(diff < 1e-50, "diff = {diff}");
    }

    #[test]
    fn complex_exp_of_i_pi_is_minus_one() {
        let prec = 128;
        let z = PrecComplex::new(Float::new(prec), pi(prec));
        let e = z.exp();
        assert!((e.re + 1u32).abs() < 1e-35);
        assert!(e.im.abs() < 1e-35);
    }
}
