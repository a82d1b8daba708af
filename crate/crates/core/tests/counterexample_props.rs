mod common;

use std::f64::consts::PI;

use common::{quad_osc, rel};
use proptest::prelude::*;
use wavegraph::counterexample::{
    closed_form_norms, divergence_diagnostic, integrated_norms, partial_sum, series_norms,
    v_closed_form, write_series_csv, CounterexampleConfig, SERIES_CSV_HEADER,
};
use wavegraph::eigenbasis::BoxDomain;
use wavegraph::oracle::norms;
use wavegraph::timefun::Horizon;
use wavegraph::Exec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closed_forms_agree_with_integration(mu in 1.0..1e6f64, t in 0.1..10.0f64) {
        let h = Horizon::new(t).unwrap();
        let a = closed_form_norms(mu, h).unwrap();
        let b = integrated_norms(mu, h).unwrap();
        prop_assert!(rel(a.vj_sq, b.vj_sq) < 1e-9);
        prop_assert!(rel(a.dt_vj_sq, b.dt_vj_sq) < 1e-9);
        prop_assert!(rel(a.dtt_vj_sq, b.dtt_vj_sq) < 1e-9);
        prop_assert!(rel(a.box_term, b.box_term) < 1e-9);
    }

    #[test]
    fn closed_forms_agree_with_quadrature(mu in 1.0..1e4f64, t in 0.5..5.0f64) {
        let a = mu.sqrt();
        let n = closed_form_norms(mu, Horizon::new(t).unwrap()).unwrap();
        let v = |s: f64| ((a * s).sin() - a * s * (a * s).cos()) / mu;
        let dv = |s: f64| s * (a * s).sin();
        let ddv = |s: f64| (a * s).sin() + a * s * (a * s).cos();
        let q = |f: &dyn Fn(f64) -> f64| quad_osc(|s| f(s).powi(2), 0.0, t, 2.0 * a + 1.0);
        prop_assert!(rel(n.vj_sq, q(&v)) < 1e-9);
        prop_assert!(rel(n.dt_vj_sq, q(&dv)) < 1e-9);
        prop_assert!(rel(n.dtt_vj_sq, q(&ddv)) < 1e-9);
        prop_assert!(rel(n.box_term, q(&|s| 2.0 * (a * s).sin())) < 1e-9);
    }
}

#[test]
fn v_matches_its_defining_integral() {
    let v = v_closed_form(1.0).unwrap();
    let q = quad_osc(|s| s * s.sin(), 0.0, PI, 1.0);
    assert!(rel(v.evaluate(PI), q) < 1e-14);
    assert!(rel(v.evaluate(PI), PI) < 1e-14);
}

#[test]
fn partial_sums_match_the_oracle_norms() {
    for d in 1..=3 {
        let dom = BoxDomain::unit(d).unwrap();
        for m in [1, 2, 7, 16, 64] {
            let cfg = CounterexampleConfig::new(dom.clone(), Horizon::new(1.0).unwrap(), m).unwrap();
            let (u, closed) = partial_sum(&cfg).unwrap();
            let o = norms(&u);
            for (a, b) in [
                (closed.l2, o.l2),
                (closed.dt, o.dt),
                (closed.grad, o.grad),
                (closed.box_, o.box_),
                (closed.dtt, o.dtt),
            ] {
                assert!(rel(a, b) < 1e-10, "d = {d}, M = {m}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn partial_sums_live_in_the_graph_space() {
    let cfg = CounterexampleConfig::new(BoxDomain::unit(2).unwrap(), Horizon::new(2.0).unwrap(), 30).unwrap();
    let (u, _) = partial_sum(&cfg).unwrap();
    for m in u.modes() {
        assert_eq!(m.coeff.evaluate(0.0), 0.0);
        assert_eq!(m.coeff.differentiate().evaluate(0.0), 0.0);
    }
}

#[test]
fn dtt_grows_strictly_and_the_rest_settles() {
    let dom = BoxDomain::unit(1).unwrap();
    let h = Horizon::new(1.0).unwrap();
    let m: Vec<usize> = (1..=400).collect();
    let rows = series_norms(&dom, h, &m, Exec::default()).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].report.dtt_sq() > w[0].report.dtt_sq());
        assert!(w[1].report.l2_sq() >= w[0].report.l2_sq());
    }
}

#[test]
fn doubling_increment_approaches_log_two() {
    let dom = BoxDomain::unit(1).unwrap();
    let h = Horizon::new(1.0).unwrap();
    let rows = series_norms(&dom, h, &[4096, 8192], Exec::default()).unwrap();
    let inc = rows[1].report.dtt_sq() - rows[0].report.dtt_sq();
    assert!(rel(inc, 2f64.ln() / (6.0 * PI)) < 1e-3);
}

#[test]
fn box_increments_shrink_like_inverse_square() {
    let dom = BoxDomain::unit(1).unwrap();
    let h = Horizon::new(1.0).unwrap();
    let m: Vec<usize> = (5..=10).map(|k| 1 << k).collect();
    let diag = divergence_diagnostic(&dom, h, &m, Exec::default()).unwrap();
    for w in diag.increments.windows(2) {
        let r = w[1].box_sq / w[0].box_sq;
        assert!((r - 0.25).abs() < 0.02, "{r}");
    }
    assert!(diag.increments_nonincreasing());
}

#[test]
fn higher_dimensions_diverge_without_a_constant() {
    for d in [2, 3] {
        let dom = BoxDomain::unit(d).unwrap();
        let m: Vec<usize> = (4..=11).map(|k| 1 << k).collect();
        let diag = divergence_diagnostic(&dom, Horizon::new(1.0).unwrap(), &m, Exec::default()).unwrap();
        assert!(diag.reference_slope.is_none());
        assert!(diag.dtt_strictly_increasing());
        assert!(diag.slope > 0.0);
    }
}

#[test]
fn csv_layout() {
    let dom = BoxDomain::unit(1).unwrap();
    let rows = series_norms(&dom, Horizon::new(1.0).unwrap(), &[1, 2], Exec::Sequential).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    write_series_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SERIES_CSV_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[0], "1");
    assert_eq!(first[6], "0");
    for field in &first[1..6] {
        let v: f64 = field.parse().unwrap();
        assert_eq!(v.to_string(), *field);
    }
}
