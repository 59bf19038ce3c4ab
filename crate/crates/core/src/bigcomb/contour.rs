use rug::ops::Pow;
use rug::Float;

use super::factorial;
use crate::error::{Error, Result};
use crate::prec::{pi, PrecComplex, PrecReal};
use crate::saddle::saddle_for;
use crate::specfun::tail_exp_complex;

/// Settings for [`stirling_contour`].
#[derive(Debug, Clone)]
pub struct ContourOptions {
    /// Circle radius; `None` means the saddle point `z₀`, or `1` when
    /// `p = rq` and no saddle exists.
    pub radius: Option<PrecReal>,
    /// Starting node count (≥ 16); doubled until two estimates agree.
    pub nodes: usize,
    pub precision_bits: u32,
    pub max_doublings: u32,
}

impl ContourOptions {
    pub fn new(precision_bits: u32) -> Self {
        ContourOptions {
            radius: None,
            nodes: 16,
            precision_bits,
            max_doublings: 16,
        }
    }

    pub fn with_radius(mut self, radius: PrecReal) -> Self {
        self.radius = Some(radius);
        self
    }

    /// Relative agreement required between successive estimates, `2^{−prec/2}`.
    pub fn tolerance(&self) -> Float {
        Float::with_val(64, 1u32) >> (self.precision_bits / 2)
    }
}

#[derive(Debug, Clone)]
pub struct ContourEstimate {
    /// `ln S_r(p, q)` from the quadrature.
    pub log_value: PrecReal,
    pub radius: PrecReal,
    pub nodes: usize,
    /// Relative change between the last two estimates.
    pub last_change: PrecReal,
}

/// `S_r(p, q) = (p!/q!)·(1/2π)∫_{−π}^{π} B_r(Re^{iθ})^q (Re^{iθ})^{−p} dθ`
/// by the trapezoid rule, returned as a natural log.
///
/// The integrand is periodic and analytic, so the rule converges
/// geometrically; nodes are doubled (reusing earlier samples) until two
/// successive estimates agree to [`ContourOptions::tolerance`].
pub fn stirling_contour(r: u32, p: u64, q: u64, opts: &ContourOptions) -> Result<ContourEstimate> {
    if r < 1 || p < 1 || q < 1 || q > p / u64::from(r) {
        return Err(Error::domain(format!(
            "contour integral needs r ≥ 1, p ≥ 1 and 1 ≤ q ≤ ⌊p/r⌋ (r = {r}, p = {p}, q = {q})"
        )));
    }
    if opts.nodes < 16 {
        return Err(Error::domain(format!(
            "contour integral needs at least 16 nodes, got {}",
            opts.nodes
        )));
    }
    let prec = opts.precision_bits;
    let radius = match &opts.radius {
        Some(radius) if *radius > 0 => Float::with_val(prec, radius),
        Some(radius) => {
            return Err(Error::domain(format!(
                "contour radius must be positive, got {radius}"
            )));
        }
        None if p > u64::from(r) * q => saddle_for(r, p, q, prec)?.z0,
        None => Float::with_val(prec, 1u32),
    };

    let work = prec + 32;
    let sampler = Sampler::new(r, p, q, &radius, work);
    let tol = opts.tolerance();

    // Even node count; sums below use the conjugate symmetry f(−θ) = conj f(θ).
    let mut nodes = opts.nodes + opts.nodes % 2;
    let mut total = sampler.initial_sum(nodes);
    let mut mean = Float::with_val(work, &total / nodes as u64);
    let mut last_change = Float::with_val(64, f64::INFINITY);
    for _ in 0..=opts.max_doublings {
        total += sampler.odd_sum(nodes);
        nodes *= 2;
        let next = Float::with_val(work, &total / nodes as u64);
        last_change = Float::with_val(
            64,
            Float::with_val(work, &next - &mean).abs() / next.clone().abs(),
        );
        mean = next;
        if last_change <= tol {
            if mean <= 0 {
                return Err(Error::Consistency(format!(
                    "contour estimate is non-positive ({})",
                    mean.to_f64()
                )));
            }
            let mut log_value = Float::with_val(work, mean.ln());
            log_value += Float::with_val(work, factorial(p)).ln();
            log_value -= Float::with_val(work, factorial(q)).ln();
            return Ok(ContourEstimate {
                log_value: Float::with_val(prec, log_value),
                radius,
                nodes,
                last_change,
            });
        }
    }
    Err(Error::Quadrature {
        doublings: opts.max_doublings,
        nodes,
        last_change: last_change.to_f64(),
    })
}

struct Sampler {
    r: i64,
    p: u64,
    q: u64,
    radius: Float,
    radius_pow: Float,
    pi: Float,
    prec: u32,
}

impl Sampler {
    fn new(r: u32, p: u64, q: u64, radius: &Float, prec: u32) -> Self {
        let radius = Float::with_val(prec, radius);
        let radius_pow = Float::with_val(prec, (&radius).pow(p)).recip();
        Sampler {
            r: i64::from(r),
            p,
            q,
            radius,
            radius_pow,
            pi: pi(prec),
            prec,
        }
    }

    /// `Re[B_r(Re^{iθ})^q (Re^{iθ})^{−p}]` at `θ = 2π·j/n`.
    fn sample(&self, j: usize, n: usize) -> Float {
        let theta = Float::with_val(self.prec, &self.pi * (2 * j) as u64) / n as u64;
        let z = PrecComplex::from_polar(&self.radius, &theta);
        let bq = tail_exp_complex(self.r, &z).pow_u(self.q);
        // R^{−p} e^{−ipθ}
        let neg_angle = -Float::with_val(self.prec, &theta * self.p);
        let zp = PrecComplex::from_polar(&self.radius_pow, &neg_angle);
        (&bq * &zp).re
    }

    /// `Σ_{j=0}^{n−1} f(θ_j)` for even `n`.
    fn initial_sum(&self, n: usize) -> Float {
        let mut sum = self.sample(0, n);
        sum += self.sample(n / 2, n);
        for j in 1..n / 2 {
            sum += Float::with_val(self.prec, self.sample(j, n) * 2u32);
        }
        sum
    }

    /// Sum over the nodes added when going from `n` to `2n` points.
    fn odd_sum(&self, n: usize) -> Float {
        let mut sum = Float::new(self.prec);
        for m in 0..n / 2 {
            sum += Float::with_val(self.prec, self.sample(2 * m + 1, 2 * n) * 2u32);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln(v: u64, prec: u32) -> Float {
        Float::with_val(prec, v).ln()
    }

    fn rel(a: &Float, b: &Float) -> f64 {
        (Float::with_val(a.prec(), a - b).abs() / b.clone().abs()).to_f64()
    }

    #[test]
    fn saddle_circle_examples() {
        let opts = ContourOptions::new(256);
        let est = stirling_contour(1, 4, 2, &opts).unwrap();
        assert!(rel(&est.log_value, &ln(7, 256)) < 1e-20);
        let est = stirling_contour(2, 6, 2, &opts).unwrap();
        assert!(rel(&est.log_value, &ln(25, 256)) < 1e-20);
    }

    #[test]
    fn radius_independence() {
        let opts = ContourOptions::new(256).with_radius(Float::with_val(256, 1u32));
        let est = stirling_contour(2, 4, 2, &opts).unwrap();
        assert!(rel(&est.log_value, &ln(3, 256)) < 1e-20);
        let opts = ContourOptions::new(256).with_radius(Float::with_val(256, 0.3));
        let est = stirling_contour(2, 6, 2, &opts).unwrap();
        assert!(rel(&est.log_value, &ln(25, 256)) < 1e-20);
    }

    #[test]
    fn domain_errors() {
        let opts = ContourOptions::new(128);
        assert!(matches!(
            stirling_contour(2, 5, 3, &opts),
            Err(Error::Domain(_))
        ));
        let few = ContourOptions {
            nodes: 8,
            ..ContourOptions::new(128)
        };
        assert!(matches!(
            stirling_contour(2, 6, 2, &few),
            Err(Error::Domain(_))
        ));
        let bad = ContourOptions::new(128).with_radius(Float::with_val(128, -1.0));
        assert!(matches!(
            stirling_contour(2, 6, 2, &bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reports_non_convergence() {
        let opts = ContourOptions {
            max_doublings: 0,
            ..ContourOptions::new(256)
        };
        // 32 nodes cannot resolve p = 40 to 2^-128.
        assert!(matches!(
            stirling_contour(1, 40, 3, &opts),
            Err(Error::Quadrature { .. })
        ));
    }
}
