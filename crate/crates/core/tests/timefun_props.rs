mod common;

use common::{quad_osc, rel};
use proptest::prelude::*;
use wavegraph::timefun::{inner, l2_norm_sq, Horizon, Kind, TrigPoly, TrigTerm};

fn term() -> impl Strategy<Value = TrigTerm> {
    (
        -1.0..1.0f64,
        0u32..=4,
        prop_oneof![1 => Just(0.0), 4 => 1e-3..50.0f64],
        any::<bool>(),
    )
        .prop_map(|(c, p, a, s)| TrigTerm::new(c, p, a, if s && a > 0.0 { Kind::Sin } else { Kind::Cos }))
}

fn poly() -> impl Strategy<Value = TrigPoly> {
    prop::collection::vec(term(), 0..5).prop_map(|t| TrigPoly::from_terms(t).unwrap())
}

fn horizon() -> impl Strategy<Value = Horizon> {
    (0.1..5.0f64).prop_map(|t| Horizon::new(t).unwrap())
}

/// Integral scale used to turn absolute errors into relative ones.
fn abs_integral(f: &TrigPoly, h: Horizon) -> f64 {
    quad_osc(|t| f.evaluate(t).abs(), 0.0, h.get(), f.max_freq().max(1.0)).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn integral_matches_quadrature(f in poly(), h in horizon()) {
        let exact = f.integrate_0t(h);
        let q = quad_osc(|t| f.evaluate(t), 0.0, h.get(), f.max_freq().max(1.0));
        let scale = abs_integral(&f, h).max(1.0);
        prop_assert!((exact - q).abs() <= 1e-10 * scale, "{} vs {} for {}", exact, q, f);
    }

    #[test]
    fn canonicalization_is_idempotent(f in poly()) {
        let once = f.canonicalized();
        prop_assert_eq!(once.canonicalized(), once);
    }

    #[test]
    fn integration_is_linear(f in poly(), g in poly(), a in -2.0..2.0f64, b in -2.0..2.0f64, h in horizon()) {
        let lhs = (&f.scale(a) + &g.scale(b)).integrate_0t(h);
        let rhs = a * f.integrate_0t(h) + b * g.integrate_0t(h);
        let scale = a.abs() * abs_integral(&f, h) + b.abs() * abs_integral(&g, h) + 1.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn derivative_integrates_back(f in poly(), h in horizon()) {
        let lhs = f.differentiate().integrate_0t(h);
        let rhs = f.evaluate(h.get()) - f.evaluate(0.0);
        let scale = abs_integral(&f.differentiate(), h).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn derivative_matches_central_difference(f in poly(), t in 0.2..4.0f64) {
        let e = 1e-5;
        let fd = (f.evaluate(t + e) - f.evaluate(t - e)) / (2.0 * e);
        let d = f.differentiate().evaluate(t);
        let scale = 1.0 + f.max_abs_coeff() * 5f64.powi(4) * (1.0 + f.max_freq()).powi(3);
        prop_assert!((fd - d).abs() <= 1e-6 * scale);
    }

    #[test]
    fn product_evaluates_pointwise(f in poly(), g in poly(), t in 0.0..5.0f64) {
        let p = f.multiply(&g).unwrap();
        let (a, b) = (f.evaluate(t), g.evaluate(t));
        let scale = 1.0 + f.max_abs_coeff() * g.max_abs_coeff() * 5f64.powi(8) * 25.0;
        prop_assert!((p.evaluate(t) - a * b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn inner_product_matches_quadrature(f in poly(), g in poly(), h in horizon()) {
        let exact = inner(&f, &g, h);
        let freq = f.max_freq() + g.max_freq() + 1.0;
        let q = quad_osc(|t| f.evaluate(t) * g.evaluate(t), 0.0, h.get(), freq);
        let scale = (l2_norm_sq(&f, h) * l2_norm_sq(&g, h)).sqrt().max(1.0);
        prop_assert!((exact - q).abs() <= 1e-10 * scale);
    }

    #[test]
    fn norm_is_nonnegative_and_matches(f in poly(), h in horizon()) {
        let n = l2_norm_sq(&f, h);
        let q = quad_osc(|t| f.evaluate(t).powi(2), 0.0, h.get(), 2.0 * f.max_freq() + 1.0);
        prop_assert!(n >= -1e-12 * q.max(1.0));
        prop_assert!((n - q).abs() <= 1e-10 * q.max(1.0));
    }
}

#[test]
fn high_power_moments_match_quadrature() {
    for p in [8, 16, 24, 30] {
        for a in [0.0, 0.3, 3.0, 17.0, 60.0] {
            let f = TrigPoly::from_terms([TrigTerm::new(1.0, p, a, Kind::Cos)]).unwrap();
            let h = Horizon::new(1.3).unwrap();
            let q = quad_osc(|t| f.evaluate(t), 0.0, 1.3, a + 1.0);
            assert!(rel(f.integrate_0t(h), q) < 1e-11, "p = {p}, a = {a}");
        }
    }
}
