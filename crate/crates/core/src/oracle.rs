//! Exact modal solutions of `u_tt - Δu = f` with homogeneous data.
//!
//! A field `u(x, t) = sum_j phi_j(x) u_j(t)` is stored as its temporal mode
//! functions. Because the `phi_j` are L²-orthonormal and `-Δ phi_j = mu_j phi_j`,
//! every space-time norm reduces to a sum of one-dimensional integrals over
//! `(0, T)`, evaluated exactly by [`crate::timefun`]. No spatial quadrature is
//! used anywhere.

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::eigenbasis::{BoxDomain, Eigenpair};
use crate::error::{invalid, Result};
use crate::par::Exec;
use crate::timefun::{freqs_equal, l2_norm_sq, Horizon, Kind, TrigPoly, TrigTerm, MAX_POWER};
use crate::Error;

/// One spatial mode of a field: eigenpair and temporal coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub pair: Eigenpair,
    pub coeff: TrigPoly,
}

/// Finite modal expansion on `Q = Ω x (0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    domain: BoxDomain,
    horizon: Horizon,
    /// Sorted by rank, ranks unique.
    modes: Vec<Mode>,
}

impl SpaceTimeField {
    pub fn new(domain: BoxDomain, horizon: Horizon, mut modes: Vec<Mode>) -> Result<Self> {
        for m in &modes {
            if m.pair.multi_index.len() != domain.dim() {
                return Err(invalid(format!(
                    "mode of rank {} has a multi-index of dimension {}, domain has {}",
                    m.pair.rank,
                    m.pair.multi_index.len(),
                    domain.dim()
                )));
            }
            if m.pair.mu.is_nan() || m.pair.mu <= 0.0 {
                return Err(invalid(format!("mode of rank {} has mu <= 0", m.pair.rank)));
            }
        }
        modes.sort_by_key(|m| m.pair.rank);
        if let Some(w) = modes.windows(2).find(|w| w[0].pair.rank == w[1].pair.rank) {
            return Err(invalid(format!("rank {} appears twice", w[0].pair.rank)));
        }
        Ok(SpaceTimeField {
            domain,
            horizon,
            modes,
        })
    }

    pub fn zero(domain: BoxDomain, horizon: Horizon) -> Self {
        SpaceTimeField {
            domain,
            horizon,
            modes: Vec::new(),
        }
    }

    /// Single-mode field `phi(x) * coeff(t)`.
    pub fn single(domain: BoxDomain, horizon: Horizon, pair: Eigenpair, coeff: TrigPoly) -> Result<Self> {
        Self::new(domain, horizon, vec![Mode { pair, coeff }])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, rank: usize) -> Option<&Mode> {
        self.modes
            .binary_search_by_key(&rank, |m| m.pair.rank)
            .ok()
            .map(|i| &self.modes[i])
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.coeff.is_zero())
    }

    fn same_setting(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.horizon != other.horizon {
            return Err(invalid("fields live on different space-time cylinders"));
        }
        Ok(())
    }

    /// Applies `op` to every mode, keeping eigenpairs.
    pub fn map_modes(&self, op: impl Fn(&Mode) -> TrigPoly + Sync + Send) -> Self {
        self.map_modes_with(Exec::default(), op)
    }

    pub fn map_modes_with(&self, exec: Exec, op: impl Fn(&Mode) -> TrigPoly + Sync + Send) -> Self {
        let coeffs = exec.map(&self.modes, op);
        SpaceTimeField {
            domain: self.domain.clone(),
            horizon: self.horizon,
            modes: self
                .modes
                .iter()
                .zip(coeffs)
                .map(|(m, coeff)| Mode {
                    pair: m.pair.clone(),
                    coeff,
                })
                .collect(),
        }
    }

    /// Mode-wise `self - other` over the union of ranks.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_setting(other)?;
        let mut modes: Vec<Mode> = Vec::with_capacity(self.modes.len() + other.modes.len());
        let (mut i, mut k) = (0, 0);
        while i < self.modes.len() || k < other.modes.len() {
            let a = self.modes.get(i);
            let b = other.modes.get(k);
            match (a, b) {
                (Some(a), Some(b)) if a.pair.rank == b.pair.rank => {
                    modes.push(Mode {
                        pair: a.pair.clone(),
                        coeff: &a.coeff - &b.coeff,
                    });
                    i += 1;
                    k += 1;
                }
                (Some(a), Some(b)) if a.pair.rank < b.pair.rank => {
                    modes.push(a.clone());
                    i += 1;
                }
                (Some(a), None) => {
                    modes.push(a.clone());
                    i += 1;
                }
                (_, Some(b)) => {
                    modes.push(Mode {
                        pair: b.pair.clone(),
                        coeff: -&b.coeff,
                    });
                    k += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Ok(SpaceTimeField {
            domain: self.domain.clone(),
            horizon: self.horizon,
            modes,
        })
    }

    /// Point value `sum_j phi_j(x) u_j(t)`.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for m in &self.modes {
            acc += crate::eigenbasis::eigenfunction_value(&m.pair, &self.domain, x)? * m.coeff.evaluate(t);
        }
        Ok(acc)
    }
}

/// Solves `u'' + mu u = f`, `u(0) = u'(0) = 0` exactly.
///
/// Evaluates `u(t) = a^{-1} int_0^t sin(a (t - s)) f(s) ds`, `a = sqrt(mu)`,
/// term by term. With `sin(a(t-s)) = (e^{ia(t-s)} - e^{-ia(t-s)}) / 2i` each
/// term `t^p e^{ibt}` of `f` contributes closed-form terms at frequencies `b`
/// and `a` only, so no frequency arithmetic is performed. Inputs whose
/// frequency equals `a` within [`FREQ_REL_TOL`](crate::timefun::FREQ_REL_TOL)
/// are resonant and produce secular `t^{p+1}` terms.
pub fn duhamel_mode(mu: f64, f: &TrigPoly) -> Result<TrigPoly> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    let a = mu.sqrt();
    let mut out: Vec<TrigTerm> = Vec::new();
    for term in f.terms() {
        // Real term = Re(z t^p e^{ibt}).
        let z = match term.kind {
            Kind::Cos => Complex64::new(term.coeff, 0.0),
            Kind::Sin => Complex64::new(0.0, -term.coeff),
        };
        let b = term.freq;
        let p = term.power;
        let pref = z / Complex64::new(0.0, 2.0 * a);

        // + e^{iat} int_0^t s^p e^{i(b-a)s} ds
        if freqs_equal(a, b) {
            if p + 1 > MAX_POWER {
                return Err(Error::PowerOverflow {
                    power: p + 1,
                    max: MAX_POWER,
                });
            }
            push_real(&mut out, pref / (p as f64 + 1.0), p + 1, a);
        } else {
            push_antiderivative(&mut out, pref, p, b - a, b, a);
        }
        // - e^{-iat} int_0^t s^p e^{i(b+a)s} ds
        push_antiderivative(&mut out, -pref, p, b + a, b, -a);
    }
    Ok(TrigPoly::from_canonical(out))
}

/// Appends `Re(w e^{i carrier t} int_0^t s^p e^{ics} ds)` for `c != 0`, where
/// `carrier + c = b`:
/// `sum_k (-1)^k p!/(p-k)! t^{p-k} e^{ibt} / (ic)^{k+1} - (-1)^p p! e^{i carrier t} / (ic)^{p+1}`.
fn push_antiderivative(out: &mut Vec<TrigTerm>, w: Complex64, p: u32, c: f64, b: f64, carrier: f64) {
    let ic = Complex64::new(0.0, c);
    let mut falling = 1.0; // p!/(p-k)!
    let mut denom = ic; // (ic)^{k+1}
    for k in 0..=p {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        push_real(out, w * (sign * falling) / denom, p - k, b);
        if k < p {
            falling *= (p - k) as f64;
            denom *= ic;
        }
    }
    // falling = p!, denom = (ic)^{p+1}
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    push_real(out, -w * (sign * falling) / denom, 0, carrier);
}

/// Appends `Re(w t^p e^{i nu t})` as real terms; `nu` may be negative.
fn push_real(out: &mut Vec<TrigTerm>, w: Complex64, p: u32, nu: f64) {
    let freq = nu.abs();
    let sin_coeff = if nu < 0.0 { w.im } else { -w.im };
    out.push(TrigTerm::new(w.re, p, freq, Kind::Cos));
    if freq != 0.0 {
        out.push(TrigTerm::new(sin_coeff, p, freq, Kind::Sin));
    }
}

/// `u'' + mu u` for one mode.
pub fn box_mode(mu: f64, u: &TrigPoly) -> TrigPoly {
    &u.differentiate().differentiate() + &u.scale(mu)
}

/// Solution of the weak problem for source `f`, mode by mode.
pub fn solve_field(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    solve_field_with(f, Exec::default())
}

pub fn solve_field_with(f: &SpaceTimeField, exec: Exec) -> Result<SpaceTimeField> {
    let coeffs = exec.try_map(f.modes(), |m| duhamel_mode(m.pair.mu, &m.coeff))?;
    let modes = f
        .modes()
        .iter()
        .zip(coeffs)
        .map(|(m, coeff)| Mode {
            pair: m.pair.clone(),
            coeff,
        })
        .collect();
    SpaceTimeField::new(f.domain().clone(), f.horizon(), modes)
}

/// The wave operator `u_tt - Δu`, mode by mode.
pub fn apply_box(u: &SpaceTimeField) -> SpaceTimeField {
    u.map_modes(|m| box_mode(m.pair.mu, &m.coeff))
}

/// Bochner-space norms of a modal field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    /// `||u||_{L²(Q)}`
    pub l2: f64,
    /// `||∂_t u||_{L²(Q)}`
    pub dt: f64,
    /// `||∇_x u||_{L²(Q)^d}`
    pub grad: f64,
    /// `||□u||_{L²(Q)}`
    pub box_: f64,
    /// `||∂_tt u||_{L²(Q)}`
    pub dtt: f64,
    /// `sqrt(dt² + grad²)`
    pub h11: f64,
    /// `sqrt(dt² + grad² + box²)`
    pub graph: f64,
}

impl NormReport {
    /// Builds the report from squared components.
    pub fn from_squares(l2_sq: f64, dt_sq: f64, grad_sq: f64, box_sq: f64, dtt_sq: f64) -> Self {
        let c = |x: f64| x.max(0.0);
        let (l2_sq, dt_sq, grad_sq, box_sq, dtt_sq) = (c(l2_sq), c(dt_sq), c(grad_sq), c(box_sq), c(dtt_sq));
        NormReport {
            l2: l2_sq.sqrt(),
            dt: dt_sq.sqrt(),
            grad: grad_sq.sqrt(),
            box_: box_sq.sqrt(),
            dtt: dtt_sq.sqrt(),
            h11: (dt_sq + grad_sq).sqrt(),
            graph: (dt_sq + grad_sq + box_sq).sqrt(),
        }
    }

    pub fn l2_sq(&self) -> f64 {
        self.l2 * self.l2
    }
    pub fn dt_sq(&self) -> f64 {
        self.dt * self.dt
    }
    pub fn grad_sq(&self) -> f64 {
        self.grad * self.grad
    }
    pub fn box_sq(&self) -> f64 {
        self.box_ * self.box_
    }
    pub fn dtt_sq(&self) -> f64 {
        self.dtt * self.dtt
    }
}

/// Per-mode squared temporal quantities, summed over modes by the caller.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ModeSquares {
    pub l2: f64,
    pub dt: f64,
    pub grad: f64,
    pub box_: f64,
    pub dtt: f64,
}

/// Compensated sums of per-mode squares in the given (rank) order.
pub(crate) fn reduce_squares(parts: impl IntoIterator<Item = ModeSquares>) -> NormReport {
    let z = || TwoFloat::from(0.0);
    let (mut l2, mut dt, mut grad, mut bx, mut dtt) = (z(), z(), z(), z(), z());
    for p in parts {
        l2 += p.l2;
        dt += p.dt;
        grad += p.grad;
        bx += p.box_;
        dtt += p.dtt;
    }
    NormReport::from_squares(
        f64::from(l2),
        f64::from(dt),
        f64::from(grad),
        f64::from(bx),
        f64::from(dtt),
    )
}

pub fn norms(u: &SpaceTimeField) -> NormReport {
    norms_with(u, Exec::default())
}

pub fn norms_with(u: &SpaceTimeField, exec: Exec) -> NormReport {
    let horizon = u.horizon();
    let parts = exec.map(u.modes(), |m| {
        let mu = m.pair.mu;
        let du = m.coeff.differentiate();
        let ddu = du.differentiate();
        let l2 = l2_norm_sq(&m.coeff, horizon);
        ModeSquares {
            l2,
            dt: l2_norm_sq(&du, horizon),
            grad: mu * l2,
            box_: l2_norm_sq(&(&ddu + &m.coeff.scale(mu)), horizon),
            dtt: l2_norm_sq(&ddu, horizon),
        }
    });
    reduce_squares(parts)
}
