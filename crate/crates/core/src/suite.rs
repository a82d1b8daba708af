//! Seeded random sources and the named checks reported by the batch runner.
//!
//! Every check yields a [`Check`] carrying the measured quantity and the limit
//! it is compared against, so a summary line shows the slack as well as the
//! verdict.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counterexample::{closed_form_norms, integrated_norms, DivergenceDiagnostic};
use crate::dualnorm::{a_h1, dual_norm_mode, test_basis, RatioRecord, TestSpaceMode};
use crate::eigenbasis::{counting_function, enumerate_eigenpairs, weyl_fit, BoxDomain};
use crate::error::Result;
use crate::lsq::{build_trial_space, solve, solve_mode_lsq};
use crate::oracle::{apply_box, box_mode, norms, solve_field, Mode, SpaceTimeField};
use crate::timefun::{inner, l2_norm_sq, Horizon, Kind, TrigPoly, TrigTerm};

/// Seeded generator used by every random suite.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Outcome of one named inequality or identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub limit: f64,
    upper: bool,
}

impl Check {
    /// Passes when `measured <= limit`.
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured <= limit,
            measured,
            limit,
            upper: true,
        }
    }

    /// Passes when `measured >= limit`.
    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured >= limit,
            measured,
            limit,
            upper: false,
        }
    }

    /// Distance to the limit, positive on the passing side.
    pub fn slack(&self) -> f64 {
        if self.upper {
            self.limit - self.measured
        } else {
            self.measured - self.limit
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:e} {} {:e} (slack {:e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            if self.upper { "<=" } else { ">=" },
            self.limit,
            self.slack()
        )
    }
}

/// Shape of the random sources.
#[derive(Debug, Clone, Copy)]
pub struct SourceShape {
    pub max_modes: usize,
    pub max_terms: usize,
    pub max_power: u32,
    pub max_freq: f64,
    /// Off-resonant frequencies keep at least this distance from `sqrt(mu)`.
    pub resonance_gap: f64,
}

impl Default for SourceShape {
    fn default() -> Self {
        SourceShape {
            max_modes: 20,
            max_terms: 3,
            max_power: 3,
            max_freq: 40.0,
            resonance_gap: 0.5,
        }
    }
}

/// One of `0.5`, `1` or `pi`.
pub fn random_horizon(rng: &mut impl Rng) -> Horizon {
    let t = [0.5, 1.0, PI][rng.random_range(0..3)];
    Horizon::new(t).expect("positive")
}

/// A temporal coefficient for a mode with natural frequency `a`.
pub fn random_coefficient(rng: &mut impl Rng, a: f64, shape: &SourceShape) -> Result<TrigPoly> {
    let n = rng.random_range(1..=shape.max_terms);
    let terms = (0..n).map(|_| {
        let coeff = rng.random_range(-1.0..1.0);
        let power = rng.random_range(0..=shape.max_power);
        let roll: f64 = rng.random();
        let freq = if roll < 0.2 {
            0.0
        } else if roll < 0.4 {
            a
        } else {
            loop {
                let b = rng.random_range(0.0..shape.max_freq);
                if (b - a).abs() >= shape.resonance_gap {
                    break b;
                }
            }
        };
        let kind = if freq == 0.0 || rng.random_bool(0.5) {
            Kind::Cos
        } else {
            Kind::Sin
        };
        TrigTerm::new(coeff, power, freq, kind)
    });
    TrigPoly::from_terms(terms.collect::<Vec<_>>())
}

/// A random source on the leading `J <= max_modes` modes.
pub fn random_source(
    rng: &mut impl Rng,
    domain: &BoxDomain,
    horizon: Horizon,
    shape: &SourceShape,
) -> Result<SpaceTimeField> {
    let j = rng.random_range(1..=shape.max_modes);
    let pairs = enumerate_eigenpairs(domain, j)?;
    let mut modes = Vec::with_capacity(j);
    for p in pairs {
        let coeff = random_coefficient(rng, p.sqrt_mu(), shape)?;
        modes.push(Mode { pair: p, coeff });
    }
    SpaceTimeField::new(domain.clone(), horizon, modes)
}

/// `count` random sources with random horizons.
pub fn random_family(
    seed: u64,
    count: usize,
    domain: &BoxDomain,
    shape: &SourceShape,
) -> Result<Vec<SpaceTimeField>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let h = random_horizon(&mut r);
            random_source(&mut r, domain, h, shape)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Closed-form temporal norms against exact integration, on `count` random
/// `(mu, T)` plus the spot values at `mu = 1, T = pi`.
pub fn check_closed_forms(seed: u64, count: usize) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..count {
        let mu = r.random_range(1.0..=1e6);
        let h = Horizon::new(r.random_range(0.1..=10.0))?;
        let a = closed_form_norms(mu, h)?;
        let b = integrated_norms(mu, h)?;
        for (x, y) in [
            (a.vj_sq, b.vj_sq),
            (a.dt_vj_sq, b.dt_vj_sq),
            (a.dtt_vj_sq, b.dtt_vj_sq),
            (a.box_term, b.box_term),
        ] {
            worst = worst.max(rel(x, y));
        }
    }
    let n = closed_form_norms(1.0, Horizon::new(PI)?)?;
    let p3 = PI.powi(3) / 6.0;
    let spot = [
        rel(n.vj_sq, p3 + 5.0 * PI / 4.0),
        rel(n.dt_vj_sq, p3 - PI / 4.0),
        rel(n.dtt_vj_sq, p3 + PI / 4.0),
        rel(n.box_term, 2.0 * PI),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("closed-form norms vs exact integration (max rel)", worst, 1e-9),
        Check::at_most("closed-form spot values at mu=1, T=pi (max rel)", spot, 1e-12),
    ])
}

/// Solutions of a family, computed once and shared by several checks.
pub struct Solved {
    pub f: SpaceTimeField,
    pub u: SpaceTimeField,
}

pub fn solve_family(family: Vec<SpaceTimeField>) -> Result<Vec<Solved>> {
    family
        .into_iter()
        .map(|f| {
            let u = solve_field(&f)?;
            Ok(Solved { f, u })
        })
        .collect()
}

/// `||u||_{H^{1,1}} <= T/sqrt(2) ||f||`, as the largest ratio of the sides.
pub fn check_stability(family: &[Solved]) -> Check {
    let worst = family
        .iter()
        .map(|s| {
            let t = s.f.horizon().get();
            let bound = t / 2f64.sqrt() * norms(&s.f).l2;
            norms(&s.u).h11 / bound
        })
        .fold(0.0, f64::max);
    Check::at_most("stability ||u||_H11 / (T/sqrt2 ||f||) (max)", worst, 1.0 + 1e-10)
}

/// Both sides of the norm equivalence between the graph norm and `||□u||`.
pub fn check_lemma(family: &[Solved]) -> Vec<Check> {
    let (mut upper, mut lower) = (0.0_f64, 0.0_f64);
    for s in family {
        let t = s.f.horizon().get();
        let n = norms(&s.u);
        upper = upper.max(n.graph / ((t * t / 2.0 + 1.0).sqrt() * n.box_));
        lower = lower.max(n.box_ / n.graph);
    }
    vec![
        Check::at_most(
            "lemma graph norm / (sqrt(T^2/2+1) ||box u||) (max)",
            upper,
            1.0 + 1e-10,
        ),
        Check::at_most("lemma ||box u|| / graph norm (max)", lower, 1.0 + 1e-10),
    ]
}

/// `apply_box(solve_field(f)) = f`, mode by mode and in norm.
pub fn check_round_trip(family: &[Solved]) -> Vec<Check> {
    let (mut per_mode, mut total) = (0.0_f64, 0.0_f64);
    for s in family {
        let h = s.f.horizon();
        let bu = apply_box(&s.u);
        for (m, b) in s.f.modes().iter().zip(bu.modes()) {
            let d = l2_norm_sq(&(&b.coeff - &m.coeff), h).max(0.0).sqrt();
            per_mode = per_mode.max(d / l2_norm_sq(&m.coeff, h).sqrt());
        }
        total = total.max(rel(norms(&s.u).box_, norms(&s.f).l2));
    }
    vec![
        Check::at_most("round trip per-mode coefficient error (max rel)", per_mode, 1e-10),
        Check::at_most("round trip ||box u|| vs ||f|| (max rel)", total, 1e-10),
    ]
}

/// `a_H1(u, phi_j psi) = <f, phi_j psi>` for test functions vanishing at `T`.
pub fn check_weak_identity(family: &[Solved], test_dim: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for s in family {
        let h = s.f.horizon();
        let basis = test_basis(h, test_dim)?;
        for m in s.f.modes() {
            let fn_ = l2_norm_sq(&m.coeff, h).sqrt();
            for psi in &basis {
                let w = SpaceTimeField::single(s.f.domain().clone(), h, m.pair.clone(), psi.clone())?;
                let lhs = a_h1(&s.u, &w)?;
                let rhs = inner(&m.coeff, psi, h);
                let scale = fn_ * l2_norm_sq(psi, h).sqrt();
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
    }
    Ok(Check::at_most("weak identity a_H1(u,w) = <f,w> (max rel)", worst, 1e-10))
}

/// Exact recovery, monotonicity in `K` and the Pythagoras identity.
pub fn check_lsq(seed: u64, family: &[Solved], max_dim: usize) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let mut recovery = 0.0_f64;
    for _ in 0..20 {
        let h = random_horizon(&mut r);
        let mu = r.random_range(1.0..400.0);
        let k0 = r.random_range(1..=6);
        let space = build_trial_space(1, k0, h)?;
        let u = space
            .basis()
            .iter()
            .fold(TrigPoly::zero(), |acc, psi| &acc + &psi.scale(r.random_range(-1.0..1.0)));
        let f = box_mode(mu, &u);
        let f = f.scale(1.0 / l2_norm_sq(&f, h).sqrt());
        for k in k0..=max_dim {
            let fit = solve_mode_lsq(mu, &f, &build_trial_space(1, k, h)?)?;
            recovery = recovery.max(fit.residual);
        }
    }

    let (mut rise, mut pythagoras) = (0.0_f64, 0.0_f64);
    for s in family {
        let j = s.f.modes().len();
        let fnorm = norms(&s.f).l2;
        let mut prev = f64::INFINITY;
        for k in 1..=max_dim {
            let sol = solve(&s.f, &build_trial_space(j, k, s.f.horizon())?)?;
            rise = rise.max((sol.residual - prev) / fnorm);
            prev = sol.residual;
            let b = norms(&sol.u_h).box_;
            pythagoras = pythagoras.max(rel(b * b + sol.residual * sol.residual, fnorm * fnorm));
        }
    }
    Ok(vec![
        Check::at_most("lsq exact recovery residual (max, unit data)", recovery, 1e-9),
        Check::at_most("lsq residual increase in K (max rel)", rise.max(0.0), 0.0),
        Check::at_most("lsq Pythagoras ||f||^2 = ||box u_h||^2 + res^2 (max rel)", pythagoras, 1e-10),
    ])
}

/// Cauchy–Schwarz bound and Riesz witness of the truncated dual norm.
pub fn check_dual_norm_bounds(seed: u64, count: usize, test_dim: usize) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let shape = SourceShape::default();
    let (mut bound, mut witness, mut monotone) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..count {
        let h = random_horizon(&mut r);
        let mu: f64 = r.random_range(1.0..2000.0);
        let g = random_coefficient(&mut r, mu.sqrt(), &shape)?;
        let gn = l2_norm_sq(&g, h).sqrt();
        let mode = TestSpaceMode::new(mu, h, test_dim)?;
        let d = dual_norm_mode(&g, &mode)?;
        bound = bound.max(d.value - gn / mu.sqrt());
        let xn = mode.x_inner(&d.maximizer, &d.maximizer).sqrt();
        witness = witness.max((inner(&g, &d.maximizer, h) / xn - d.value).abs() / d.value);
        let smaller = dual_norm_mode(&g, &TestSpaceMode::new(mu, h, test_dim - 1)?)?;
        monotone = monotone.max(smaller.value - d.value);
    }
    Ok(vec![
        Check::at_most("dual norm <= ||g||/sqrt(mu) (max excess)", bound, 1e-12),
        Check::at_most("dual norm Riesz witness (max rel)", witness, 1e-10),
        Check::at_most("dual norm decrease from K-1 to K (max)", monotone, 1e-13),
    ])
}

/// The resonant-family growth and the truncation diagnostic at `mu = pi^2`.
pub fn check_infsup(records: &[RatioRecord], horizon: Horizon) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let drops = records
        .windows(2)
        .filter(|w| w[1].ratio <= w[0].ratio)
        .count();
    checks.push(Check::at_most(
        format!("stability ratio increasing for j = 1..{} (decreases)", records.len()),
        drops as f64,
        0.0,
    ));
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        checks.push(Check::at_least(
            format!("stability ratio({}) / ratio({})", last.j, first.j),
            last.ratio / first.ratio,
            4.0,
        ));
    }
    let g = TrigPoly::sin(1.0, 0, PI)?;
    let v = |k| -> Result<f64> { Ok(dual_norm_mode(&g, &TestSpaceMode::new(PI * PI, horizon, k)?)?.value) };
    let (a, b) = (v(10)?, v(12)?);
    checks.push(Check::at_most("dual norm K=10 vs K=12 at mu=pi^2 (rel)", rel(a, b), 1e-6));
    Ok(checks)
}

/// Slope, monotone divergence and convergent components of the series.
pub fn check_divergence(diag: &DivergenceDiagnostic) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Some(e) = diag.slope_rel_error() {
        checks.push(Check::at_most(
            "dtt^2 slope vs T^3 L/(6 pi) (rel)",
            e,
            0.02,
        ));
    } else {
        let first = diag.rows.first().map_or(0.0, |r| r.report.dtt_sq());
        let last = diag.rows.last().map_or(0.0, |r| r.report.dtt_sq());
        checks.push(Check::at_least("dtt^2 growth over the M list (ratio)", last / first, 1.0));
    }
    let rises = diag
        .rows
        .windows(2)
        .filter(|w| w[1].report.dtt_sq() <= w[0].report.dtt_sq())
        .count();
    checks.push(Check::at_most("dtt^2 strictly increasing in M (violations)", rises as f64, 0.0));
    let names = ["l2^2", "dt^2", "grad^2", "box^2"];
    for (name, c) in names.iter().zip(diag.last_relative_change()) {
        checks.push(Check::at_most(
            format!("{name} change over the last step (rel)"),
            c,
            1e-3,
        ));
    }
    checks
}

/// Weyl bracket on a sub-range and lattice counting against brute force.
pub fn check_weyl(domain: &BoxDomain, count: usize, j_min: usize, j_check: usize) -> Result<Vec<Check>> {
    let d = domain.dim();
    let eigs = enumerate_eigenpairs(domain, count)?;
    let fit = weyl_fit(&eigs, d, j_min)?;
    let outside = eigs
        .iter()
        .filter(|p| p.rank >= j_min && p.rank <= j_check && !fit.contains(p, d))
        .count();

    // Thresholds strictly between eigenvalues, well inside the enumerated range.
    let top = eigs[count - 1].mu;
    let mut mismatches = 0;
    for frac in [0.05, 0.2, 0.45, 0.7, 0.9] {
        let idx = ((count as f64 * frac) as usize).max(1);
        let lambda = 0.5 * (eigs[idx - 1].mu + eigs[idx].mu);
        if eigs[idx - 1].mu == eigs[idx].mu || lambda >= top {
            continue;
        }
        if counting_function(&eigs, lambda) != brute_force_count(domain, lambda) {
            mismatches += 1;
        }
    }
    Ok(vec![
        Check::at_most(
            format!("Weyl ratios j in [{j_min}, {j_check}] outside fitted bracket"),
            outside as f64,
            0.0,
        ),
        Check::at_most("eigenvalue counting vs lattice brute force (mismatches)", mismatches as f64, 0.0),
    ])
}

/// Lattice points with `mu_k <= lambda`, by exhaustive search.
pub fn brute_force_count(domain: &BoxDomain, lambda: f64) -> usize {
    let limits: Vec<u32> = domain
        .edges()
        .iter()
        .map(|l| (l * lambda.sqrt() / PI).floor() as u32 + 1)
        .collect();
    let mut count = 0;
    let mut k = vec![1u32; limits.len()];
    'outer: loop {
        if domain.eigenvalue(&k) <= lambda {
            count += 1;
        }
        for axis in (0..k.len()).rev() {
            if k[axis] < limits[axis] {
                k[axis] += 1;
                continue 'outer;
            }
            k[axis] = 1;
        }
        return count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_reproducible() {
        let dom = BoxDomain::unit(1).unwrap();
        let shape = SourceShape::default();
        let a = random_family(7, 5, &dom, &shape).unwrap();
        let b = random_family(7, 5, &dom, &shape).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_family(8, 5, &dom, &shape).unwrap());
    }

    #[test]
    fn off_resonant_frequencies_keep_their_distance() {
        let mut r = rng(3);
        let shape = SourceShape::default();
        for _ in 0..200 {
            let a = r.random_range(1.0..30.0);
            let g = random_coefficient(&mut r, a, &shape).unwrap();
            for t in g.terms() {
                assert!(t.freq == 0.0 || t.freq == a || (t.freq - a).abs() >= 0.5);
                assert!(t.power <= 3);
            }
        }
    }

    #[test]
    fn check_display() {
        let c = Check::at_most("x", 0.5, 1.0);
        assert_eq!(c.to_string(), "PASS x: measured 5e-1 <= 1e0 (slack 5e-1)");
        assert!(!Check::at_least("y", 0.5, 1.0).pass);
    }

    #[test]
    fn brute_force_matches_interval() {
        let dom = BoxDomain::unit(1).unwrap();
        assert_eq!(brute_force_count(&dom, 4.5 * PI * PI), 2);
    }
}
