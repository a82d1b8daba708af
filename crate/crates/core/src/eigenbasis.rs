//! Dirichlet Laplace eigenpairs on axis-aligned boxes.
//!
//! On `(0, L_1) x ... x (0, L_d)` the eigenfunctions are tensor products of
//! `sqrt(2 / L_i) sin(k_i pi x_i / L_i)` with eigenvalue
//! `mu = pi^2 sum_i (k_i / L_i)^2`. Ranks are 1-based, ascending in `mu`, with
//! ties broken lexicographically by multi-index.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// The box `(0, L_1) x ... x (0, L_d)`, `1 <= d <= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    edges: Vec<f64>,
}

impl BoxDomain {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.len() > 3 {
            return Err(invalid(format!(
                "box dimension must be 1, 2 or 3, got {}",
                edges.len()
            )));
        }
        if let Some(bad) = edges.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid(format!("edge lengths must be positive, got {bad}")));
        }
        Ok(BoxDomain { edges })
    }

    /// Unit cube `(0, 1)^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn volume(&self) -> f64 {
        self.edges.iter().product()
    }

    /// `pi^2 sum_i (k_i / L_i)^2`. Integer sums are formed first so that equal
    /// eigenvalues of a unit box compare equal bit for bit.
    pub fn eigenvalue(&self, multi_index: &[u32]) -> f64 {
        let s: f64 = multi_index
            .iter()
            .zip(&self.edges)
            .map(|(&k, &l)| {
                let q = k as f64 / l;
                q * q
            })
            .sum();
        PI * PI * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub multi_index: Vec<u32>,
    pub mu: f64,
    /// 1-based position in the ascending enumeration.
    pub rank: usize,
}

impl Eigenpair {
    #[inline]
    pub fn sqrt_mu(&self) -> f64 {
        self.mu.sqrt()
    }
}

fn order(a: &(f64, Vec<u32>), b: &(f64, Vec<u32>)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

/// The `count` smallest eigenpairs (with multiplicity) of the box.
pub fn enumerate_eigenpairs(domain: &BoxDomain, count: usize) -> Result<Vec<Eigenpair>> {
    if count == 0 {
        return Err(invalid("eigenpair count must be at least 1"));
    }
    let d = domain.dim();

    // Any index set with at least `count` members bounds the count-th
    // eigenvalue from above; the cube {1..n}^d with n^d >= count is cheap.
    let mut n = (count as f64).powf(1.0 / d as f64).ceil() as u32;
    while (n as usize).pow(d as u32) < count {
        n += 1;
    }
    let mut cube: Vec<f64> = Vec::with_capacity((n as usize).pow(d as u32));
    for_each_index(&vec![n; d], |k| cube.push(domain.eigenvalue(k)));
    cube.sort_by(f64::total_cmp);
    let cap = cube[count - 1];

    let limits: Vec<u32> = domain
        .edges()
        .iter()
        .map(|l| (l * cap.sqrt() / PI).floor() as u32 + 1)
        .collect();
    let mut candidates: Vec<(f64, Vec<u32>)> = Vec::new();
    for_each_index(&limits, |k| {
        let mu = domain.eigenvalue(k);
        if mu <= cap {
            candidates.push((mu, k.to_vec()));
        }
    });
    candidates.sort_by(order);
    candidates.truncate(count);

    Ok(candidates
        .into_iter()
        .enumerate()
        .map(|(i, (mu, multi_index))| Eigenpair {
            multi_index,
            mu,
            rank: i + 1,
        })
        .collect())
}

/// Visits every multi-index in `{1..limits[0]} x ... x {1..limits[d-1]}` in
/// lexicographic order.
fn for_each_index(limits: &[u32], mut f: impl FnMut(&[u32])) {
    if limits.contains(&0) {
        return;
    }
    let mut k = vec![1u32; limits.len()];
    loop {
        f(&k);
        let mut axis = limits.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if k[axis] < limits[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = 1;
        }
    }
}

/// Value of the L²-normalized eigenfunction of `pair` at `x`.
pub fn eigenfunction_value(pair: &Eigenpair, domain: &BoxDomain, x: &[f64]) -> Result<f64> {
    if x.len() != domain.dim() || pair.multi_index.len() != domain.dim() {
        return Err(invalid(format!(
            "point and multi-index must have dimension {}",
            domain.dim()
        )));
    }
    let mut value = 1.0;
    for ((&xi, &l), &k) in x.iter().zip(domain.edges()).zip(&pair.multi_index) {
        if !(0.0..=l).contains(&xi) {
            return Err(invalid(format!("point coordinate {xi} outside [0, {l}]")));
        }
        if xi == 0.0 || xi == l {
            return Ok(0.0);
        }
        value *= (2.0 / l).sqrt() * (k as f64 * PI * xi / l).sin();
    }
    Ok(value)
}

/// Empirical two-sided Weyl constants `c1 <= mu_j / j^(2/d) <= c2` over the
/// ranks `j >= j_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylFit {
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub j_min: usize,
}

impl WeylFit {
    pub fn contains(&self, pair: &Eigenpair, d: usize) -> bool {
        let r = weyl_ratio(pair, d);
        self.c1_hat <= r && r <= self.c2_hat
    }
}

#[inline]
pub fn weyl_ratio(pair: &Eigenpair, d: usize) -> f64 {
    pair.mu / (pair.rank as f64).powf(2.0 / d as f64)
}

pub fn weyl_fit(eigs: &[Eigenpair], d: usize, j_min: usize) -> Result<WeylFit> {
    if !(1..=3).contains(&d) {
        return Err(invalid(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for p in eigs.iter().filter(|p| p.rank >= j_min) {
        let r = weyl_ratio(p, d);
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    if !c1.is_finite() {
        return Err(invalid(format!("no eigenvalue with rank >= {j_min}")));
    }
    Ok(WeylFit {
        c1_hat: c1,
        c2_hat: c2,
        j_min,
    })
}

/// Number of enumerated eigenvalues `<= threshold`.
pub fn counting_function(eigs: &[Eigenpair], threshold: f64) -> usize {
    eigs.partition_point(|p| p.mu <= threshold)
}
