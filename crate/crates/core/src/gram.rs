//! Modified Gram–Schmidt over [`TrigPoly`] functions and shifted Legendre
//! polynomials, shared by the least-squares solver and the dual-norm code.

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::timefun::{Horizon, TrigPoly};

/// Pivots below this fraction of the leading pivot count as dependence.
pub const PIVOT_REL_TOL: f64 = 1e-12;

/// `G_ij = ip(f_i, f_j)`.
pub(crate) fn gram_matrix(funcs: &[TrigPoly], ip: impl Fn(&TrigPoly, &TrigPoly) -> f64) -> Vec<Vec<f64>> {
    let n = funcs.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = ip(&funcs[i], &funcs[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Modified Gram–Schmidt, with one full reorthogonalization pass, of a set of
/// functions given only through their exact Gram matrix `G`.
///
/// Each `q_k` is kept as double-double coordinates over the input functions,
/// so no intermediate function is rounded to `f64` coefficients.
pub(crate) struct Orthonormal {
    gram: Vec<Vec<f64>>,
    /// `q[k][j]`: coordinate of `q_k` on the `j`-th input.
    q: Vec<Vec<TwoFloat>>,
    /// Column-wise upper triangle: `r[k][i]` for `i <= k`.
    r: Vec<Vec<TwoFloat>>,
}

impl Orthonormal {
    /// Pivots below `PIVOT_REL_TOL` of the leading one mark a dependent set.
    pub fn factor(gram: Vec<Vec<f64>>) -> Result<Self> {
        let n = gram.len();
        let mut o = Orthonormal {
            gram,
            q: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
        };
        let mut leading = 0.0;
        for k in 0..n {
            let mut v = vec![TwoFloat::from(0.0); n];
            v[k] = TwoFloat::from(1.0);
            let mut col = vec![TwoFloat::from(0.0); k + 1];
            for _ in 0..2 {
                for (qi, ci) in o.q.iter().zip(col.iter_mut()) {
                    let c = o.inner(qi, &v);
                    for (vj, qj) in v.iter_mut().zip(qi) {
                        *vj -= c * *qj;
                    }
                    *ci += c;
                }
            }
            let norm_sq = o.inner(&v, &v);
            let pivot = f64::from(norm_sq).max(0.0).sqrt();
            if k == 0 {
                leading = pivot;
            }
            if pivot <= PIVOT_REL_TOL * leading || pivot == 0.0 {
                return Err(Error::RankDeficient {
                    index: k + 1,
                    pivot,
                    leading,
                });
            }
            let pivot = norm_sq.sqrt();
            col[k] = pivot;
            o.q.push(v.into_iter().map(|x| x / pivot).collect());
            o.r.push(col);
        }
        Ok(o)
    }

    /// `u^T G v`.
    fn inner(&self, u: &[TwoFloat], v: &[TwoFloat]) -> TwoFloat {
        let mut s = TwoFloat::from(0.0);
        for (row, ui) in self.gram.iter().zip(u) {
            let mut t = TwoFloat::from(0.0);
            for (g, vj) in row.iter().zip(v) {
                t += *vj * *g;
            }
            s += *ui * t;
        }
        s
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        self.r.iter().enumerate().map(|(k, col)| f64::from(col[k]))
    }

    /// Ratio of largest to smallest pivot.
    pub fn condition(&self) -> f64 {
        let (lo, hi) = self
            .pivots()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        hi / lo
    }

    /// `<q_k, f>` from the loads `b_j = <g_j, f>`.
    pub fn project(&self, load: &[f64]) -> Vec<TwoFloat> {
        self.q
            .iter()
            .map(|qk| {
                qk.iter()
                    .zip(load)
                    .fold(TwoFloat::from(0.0), |s, (q, b)| s + *q * *b)
            })
            .collect()
    }

    /// Solves `R c = p`: coordinates over the inputs of `sum_k p_k q_k`.
    pub fn back_substitute(&self, p: &[TwoFloat]) -> Vec<f64> {
        let n = self.r.len();
        let mut c = vec![TwoFloat::from(0.0); n];
        for k in (0..n).rev() {
            let mut s = p[k];
            for (rj, cj) in self.r.iter().zip(&c).skip(k + 1) {
                s -= rj[k] * *cj;
            }
            c[k] = s / self.r[k][k];
        }
        c.into_iter().map(f64::from).collect()
    }
}

/// `sum p_k²` in double-double.
pub(crate) fn captured(p: &[TwoFloat]) -> f64 {
    f64::from(p.iter().fold(TwoFloat::from(0.0), |s, x| s + *x * *x))
}

/// `sum a_i b_i` in double-double.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let s = a
        .iter()
        .zip(b)
        .fold(TwoFloat::from(0.0), |s, (x, y)| s + TwoFloat::new_mul(*x, *y));
    f64::from(s)
}

/// Monomial coefficients (in `t`) of `P_n(2t/T - 1)`.
///
/// On `[0, 1]`, `P_n(2x - 1) = sum_k (-1)^(n+k) C(n,k) C(n+k,k) x^k`; the
/// integer coefficients are exact in `f64` for every degree used here.
pub(crate) fn shifted_legendre(n: usize, horizon: Horizon) -> Vec<f64> {
    let inv_t = 1.0 / horizon.get();
    let mut out = Vec::with_capacity(n + 1);
    let mut binom_n_k = 1.0; // C(n, k)
    let mut binom_nk_k = 1.0; // C(n+k, k)
    let mut scale = 1.0; // T^{-k}
    for k in 0..=n {
        if k > 0 {
            binom_n_k = binom_n_k * (n + 1 - k) as f64 / k as f64;
            binom_nk_k = binom_nk_k * (n + k) as f64 / k as f64;
            scale *= inv_t;
        }
        let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        out.push(sign * binom_n_k * binom_nk_k * scale);
    }
    out
}
