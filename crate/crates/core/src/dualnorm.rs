//! Dual norms over the `H^{1,1}` test space and the stability ratio of the
//! `H^1` formulation.
//!
//! For a source `f = phi_j g(t)` supported on one spatial mode, the dual norm
//! over `{w : w(T) = 0}` with `||w||² = ||∂_t w||² + ||∇w||²` reduces by
//! orthogonality to a one-dimensional problem in the inner product
//! `(v, w)_X = <v', w'> + mu <v, w>`. The sup is taken over the polynomial
//! subspace spanned by `(T - t) P_i(2t/T - 1)`, `i < K`, as `sqrt(b^T G^-1 b)`
//! with the exact X-Gram matrix `G` and the load vector `b_i = <g, w_i>`.

use std::io::Write;
use std::path::Path;

use crate::eigenbasis::{enumerate_eigenpairs, BoxDomain, Eigenpair};
use twofloat::TwoFloat;

use crate::error::{invalid, Result};
use crate::gram::{captured, dot, gram_matrix, shifted_legendre, Orthonormal};
use crate::oracle::{norms, solve_field, SpaceTimeField};
use crate::par::Exec;
use crate::timefun::{inner, Horizon, TrigPoly};

/// Default test-space dimension.
pub const DEFAULT_TEST_DIM: usize = 12;

/// `sum_j int_0^T (-v_j' w_j' + mu_j v_j w_j) dt` over ranks present in both.
pub fn a_h1(v: &SpaceTimeField, w: &SpaceTimeField) -> Result<f64> {
    if v.domain() != w.domain() || v.horizon() != w.horizon() {
        return Err(invalid("fields live on different domains or horizons"));
    }
    let h = v.horizon();
    let mut s = TwoFloat::from(0.0);
    for m in v.modes() {
        if let Some(n) = w.mode(m.pair.rank) {
            s += m.pair.mu * inner(&m.coeff, &n.coeff, h);
            s -= inner(&m.coeff.differentiate(), &n.coeff.differentiate(), h);
        }
    }
    Ok(f64::from(s))
}

/// One spatial mode of the test space, truncated to `dim` temporal functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSpaceMode {
    pub mu: f64,
    pub horizon: Horizon,
    pub dim: usize,
}

impl TestSpaceMode {
    pub fn new(mu: f64, horizon: Horizon, dim: usize) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("mu must be positive, got {mu}")));
        }
        if dim == 0 {
            return Err(invalid("test space needs K >= 1"));
        }
        Ok(TestSpaceMode { mu, horizon, dim })
    }

    /// `(v, w)_X = <v', w'> + mu <v, w>`.
    pub fn x_inner(&self, v: &TrigPoly, w: &TrigPoly) -> f64 {
        inner(&v.differentiate(), &w.differentiate(), self.horizon)
            + self.mu * inner(v, w, self.horizon)
    }
}

/// `(T - t) P_i(2t/T - 1)` for `i < dim`; each vanishes at `t = T`.
pub fn test_basis(horizon: Horizon, dim: usize) -> Result<Vec<TrigPoly>> {
    let t = horizon.get();
    let bubble = TrigPoly::polynomial(&[t, -1.0])?;
    (0..dim)
        .map(|i| bubble.multiply(&TrigPoly::polynomial(&shifted_legendre(i, horizon))?))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DualNorm {
    pub value: f64,
    /// Coefficients of the maximizer in the test basis.
    pub coefficients: Vec<f64>,
    /// Element of the subspace attaining the sup, scaled so that
    /// `<g, w*> = ||w*||_X² = value²`.
    pub maximizer: TrigPoly,
    /// `<g, w*>` from the Riesz system.
    pub pairing: f64,
    /// `||w*||_X` from the Gram matrix.
    pub x_norm: f64,
}

/// `sup_w <g, w> / ||w||_X` over the truncated test space, from the Riesz
/// system `G x = b` with the X-Gram matrix `G` and `b_i = <g, w_i>`.
///
/// The work is done on the unit interval, where the Legendre coefficients are
/// integers: with `w(t) = W(t/T)`, `||w||_X² = ||W'||²/T + mu T ||W||²` and
/// `<g, w> = T <g(T.), W>`. The basis is orthonormalized in `X` through `G`,
/// so the value is `|Q^T b|` and `x = R^-1 Q^T b`.
pub fn dual_norm_mode(g: &TrigPoly, mode: &TestSpaceMode) -> Result<DualNorm> {
    let t = mode.horizon.get();
    let unit = Horizon::new(1.0)?;
    let basis = test_basis(unit, mode.dim)?;
    let gram = gram_matrix(&basis, |a, b| {
        inner(&a.differentiate(), &b.differentiate(), unit) / t + mode.mu * t * inner(a, b, unit)
    });
    let g_unit = g.rescale_time(t)?;
    let b: Vec<f64> = basis.iter().map(|w| t * inner(&g_unit, w, unit)).collect();

    let orth = Orthonormal::factor(gram)?;
    let proj = orth.project(&b);
    let x = orth.back_substitute(&proj);
    let pairing = dot(&x, &b);
    let gx: Vec<f64> = orth.gram().iter().map(|row| dot(row, &x)).collect();
    let x_norm = dot(&x, &gx).max(0.0).sqrt();
    let maximizer = basis
        .iter()
        .zip(&x)
        .fold(TrigPoly::zero(), |acc, (w, &c)| &acc + &w.scale(c))
        .rescale_time(1.0 / t)?;
    Ok(DualNorm {
        value: captured(&proj).sqrt(),
        coefficients: x,
        maximizer,
        pairing,
        x_norm,
    })
}

/// Stability ratio for the resonant datum `f = phi_j sin(sqrt(mu_j) t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRecord {
    pub j: usize,
    pub mu: f64,
    pub h11_norm_u: f64,
    pub dual_norm_f: f64,
    /// `h11_norm_u / dual_norm_f`.
    pub ratio: f64,
    pub dim: usize,
}

fn ratio_for(pair: &Eigenpair, domain: &BoxDomain, horizon: Horizon, dim: usize) -> Result<RatioRecord> {
    let g = TrigPoly::sin(1.0, 0, pair.sqrt_mu())?;
    let f = SpaceTimeField::single(domain.clone(), horizon, pair.clone(), g.clone())?;
    let u = solve_field(&f)?;
    let h11 = norms(&u).h11;
    let dual = dual_norm_mode(&g, &TestSpaceMode::new(pair.mu, horizon, dim)?)?.value;
    Ok(RatioRecord {
        j: pair.rank,
        mu: pair.mu,
        h11_norm_u: h11,
        dual_norm_f: dual,
        ratio: h11 / dual,
        dim,
    })
}

pub fn infsup_ratio(j: usize, domain: &BoxDomain, horizon: Horizon, dim: usize) -> Result<RatioRecord> {
    Ok(infsup_scan(&[j], domain, horizon, dim, Exec::Sequential)?.remove(0))
}

/// Ratios for the given ranks, in input order.
pub fn infsup_scan(
    ranks: &[usize],
    domain: &BoxDomain,
    horizon: Horizon,
    dim: usize,
    exec: Exec,
) -> Result<Vec<RatioRecord>> {
    if dim == 0 {
        return Err(invalid("test space needs K >= 1"));
    }
    if ranks.contains(&0) {
        return Err(invalid("ranks start at 1"));
    }
    let Some(&top) = ranks.iter().max() else {
        return Ok(Vec::new());
    };
    let pairs = enumerate_eigenpairs(domain, top)?;
    exec.try_map(ranks, |&j| ratio_for(&pairs[j - 1], domain, horizon, dim))
}

pub const INFSUP_CSV_HEADER: &str = "j,mu,h11_norm_u,dual_norm_f,ratio,K";

pub fn write_infsup_csv(rows: &[RatioRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{INFSUP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.j, r.mu, r.h11_norm_u, r.dual_norm_f, r.ratio, r.dim
        )?;
    }
    out.flush()?;
    Ok(())
}
