use proptest::prelude::*;
use rug::Float;

use rassoc_core::approx::{cd, cd_from_hennecart, hennecart};
use rassoc_core::bigcomb::{stirling, stirling_row};
use rassoc_core::saddle::{default_tolerance, saddle_for, solve_saddle};
use rassoc_core::specfun::{
    curvature_factor, elasticity, phase_second_derivative, tail_exp, tail_exp_by_subtraction,
};
use rassoc_core::Caps;

fn rel(a: &Float, b: &Float) -> f64 {
    (Float::with_val(a.prec(), a - b) / b).abs().to_f64()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elasticity_is_increasing(r in 1u32..=6, lz in -12.0f64..7.0, step in 1e-3f64..1.0) {
        let z1 = Float::with_val(128, lz.exp());
        let z2 = Float::with_val(128, (lz + step).exp());
        prop_assert!(elasticity(r, &z1).unwrap() < elasticity(r, &z2).unwrap());
    }

    #[test]
    fn saddle_round_trip(r in 1u32..=6, lgap in -25.0f64..18.0) {
        let x = Float::with_val(128, r) + Float::with_val(128, lgap.exp());
        let s = solve_saddle(r, &x, &default_tolerance(128)).unwrap();
        let back = elasticity(r, &s.z0).unwrap();
        prop_assert!(rel(&back, &x) <= 2f64.powi(-112));
    }

    #[test]
    fn phase_curvature_identity_at_saddle(r in 1u32..=5, q in 1u64..300, a in 1u64..400) {
        let p = u64::from(r) * q + a;
        let z0 = saddle_for(r, p, q, 128).unwrap().z0;
        let lhs = phase_second_derivative(r, p, q, &z0).unwrap();
        let rhs = Float::with_val(128, curvature_factor(r, &z0).unwrap() * (2 * q)) / &z0;
        prop_assert!(rel(&lhs, &rhs) < 1e-20);
    }

    #[test]
    fn tail_exp_survives_cancellation(r in 1i64..=6, lz in -69.0f64..-2.0) {
        // 512 bits of subtraction are not enough near 0 for large r, so the
        // reference precision grows with the cancellation.
        let z = Float::with_val(128, lz.exp());
        let lost = (r as f64 * -lz / std::f64::consts::LN_2).ceil() as u32;
        let reference = tail_exp_by_subtraction(r, &Float::with_val(512.max(128 + lost + 64), &z));
        prop_assert!(rel(&tail_exp(r, &z), &reference) < 1e-36);
    }

    #[test]
    fn cd_ratio_matches_definition(r in 1u32..=4, q in 1u64..60, a in 1u64..80) {
        let p = u64::from(r) * q + a;
        let closed = cd(r, p, q, 128).unwrap().log_value;
        let defn = cd_from_hennecart(r, p, q, 128).unwrap().log_value;
        let d = Float::with_val(128, &closed - &defn).abs().to_f64();
        prop_assert!(d < 1e-20);
    }

    #[test]
    fn row_sums_to_restricted_bell(p in 0u64..40) {
        // Σ_q S_1(p, q) = Bell(p) and Bell(p+1) = Σ_k C(p, k) Bell(k)
        let caps = Caps::default();
        let bell = |n: u64| -> rug::Integer {
            stirling_row(1, n, &caps).unwrap().iter().map(|c| c.value().clone()).sum()
        };
        let mut rhs = rug::Integer::new();
        for k in 0..=p {
            rhs += rassoc_core::bigcomb::binomial(p, k) * bell(k);
        }
        prop_assert_eq!(bell(p + 1), rhs);
    }

    #[test]
    fn associated_numbers_are_monotone_in_r(p in 1u64..50, q in 1u64..25) {
        let caps = Caps::default();
        let s1 = stirling(1, p, q, &caps).unwrap();
        let s2 = stirling(2, p, q, &caps).unwrap();
        prop_assert!(s2.value() <= s1.value());
    }
}

#[test]
fn hennecart_error_shrinks_with_p() {
    // same q/p, larger p: smaller relative error
    let caps = Caps::default();
    let mut last = f64::INFINITY;
    for p in [40u64, 80, 160] {
        let q = p / 4;
        let exact = stirling(2, p, q, &caps).unwrap().ln(128).unwrap();
        let f = hennecart(2, p, q, 128).unwrap().log_value;
        let e = Float::with_val(128, &f - &exact).exp_m1().abs().to_f64();
        assert!(e < last, "p = {p}");
        last = e;
    }
}
