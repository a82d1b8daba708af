//! Exact algebra of trigonometric polynomials in `t`.
//!
//! A [`TrigPoly`] is a finite sum of terms `c * t^p * cos(a t)` or
//! `c * t^p * sin(a t)`. The class is closed under differentiation and
//! multiplication, and every definite integral over `(0, T)` has a closed
//! form, so all temporal norms in this crate are computed without quadrature.
//!
//! Integrals are evaluated through the scaled moments
//! `J_p(w) = int_0^1 s^p e^{i w s} ds`, using the forward recurrence when
//! `w >= max(p, 1)` and the backward recurrence otherwise; each direction is
//! stable in its regime. Pure monomial contributions and all products of
//! coefficients are accumulated in double-double arithmetic, which keeps
//! inner products of polynomials with large cancelling monomial coefficients
//! (shifted Legendre bases) accurate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use twofloat::TwoFloat;

use crate::error::{invalid, Error, Result};

/// Largest power of `t` any term may carry.
pub const MAX_POWER: u32 = 32;

/// Relative tolerance under which two frequencies are the same frequency.
pub const FREQ_REL_TOL: f64 = 1e-12;

/// Terms with `|c| < COEFF_REL_DROP * max |c|` are removed on canonicalization.
pub const COEFF_REL_DROP: f64 = 1e-14;

/// Length `T > 0` of the time interval `(0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Horizon(f64);

impl Horizon {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Horizon(t))
        } else {
            Err(invalid(format!("time horizon must be positive and finite, got {t}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `true` when `a` and `b` agree to [`FREQ_REL_TOL`] relative.
#[inline]
pub fn freqs_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= FREQ_REL_TOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Cos,
    Sin,
}

/// One term `coeff * t^power * kind(freq * t)`.
///
/// `Cos` with `freq == 0` is the pure monomial; `Sin` with `freq == 0` is
/// identically zero and never survives canonicalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub coeff: f64,
    pub power: u32,
    pub freq: f64,
    pub kind: Kind,
}

impl TrigTerm {
    pub fn new(coeff: f64, power: u32, freq: f64, kind: Kind) -> Self {
        TrigTerm {
            coeff,
            power,
            freq,
            kind,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.coeff.is_finite() {
            return Err(invalid(format!("non-finite coefficient {}", self.coeff)));
        }
        if !(self.freq.is_finite() && self.freq >= 0.0) {
            return Err(invalid(format!(
                "frequency must be finite and nonnegative, got {}",
                self.freq
            )));
        }
        if self.power > MAX_POWER {
            return Err(Error::PowerOverflow {
                power: self.power,
                max: MAX_POWER,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn evaluate(&self, t: f64) -> f64 {
        let base = self.coeff * t.powi(self.power as i32);
        match self.kind {
            Kind::Cos if self.freq == 0.0 => base,
            Kind::Cos => base * (self.freq * t).cos(),
            Kind::Sin => base * (self.freq * t).sin(),
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.freq
            .total_cmp(&other.freq)
            .then(self.kind.cmp(&other.kind))
            .then(self.power.cmp(&other.power))
    }
}

/// Finite sum of [`TrigTerm`]s in canonical order `(freq, kind, power)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_canonical(vec![TrigTerm::new(c, 0, 0.0, Kind::Cos)])
    }

    pub fn monomial(coeff: f64, power: u32) -> Result<Self> {
        Self::from_terms([TrigTerm::new(coeff, power, 0.0, Kind::Cos)])
    }

    /// `coeff * t^power * cos(freq t)`.
    pub fn cos(coeff: f64, power: u32, freq: f64) -> Result<Self> {
        Self::from_terms([TrigTerm::new(coeff, power, freq, Kind::Cos)])
    }

    /// `coeff * t^power * sin(freq t)`.
    pub fn sin(coeff: f64, power: u32, freq: f64) -> Result<Self> {
        Self::from_terms([TrigTerm::new(coeff, power, freq, Kind::Sin)])
    }

    /// Polynomial `sum_p coeffs[p] * t^p`.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(p, &c)| TrigTerm::new(c, p as u32, 0.0, Kind::Cos)),
        )
    }

    pub fn from_terms(terms: impl IntoIterator<Item = TrigTerm>) -> Result<Self> {
        let terms: Vec<TrigTerm> = terms.into_iter().collect();
        for t in &terms {
            t.validate()?;
        }
        Ok(Self::from_canonical(terms))
    }

    /// Builds from terms already known to be valid.
    pub(crate) fn from_canonical(terms: Vec<TrigTerm>) -> Self {
        TrigPoly {
            terms: canonicalize(terms),
        }
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    /// Largest frequency present.
    pub fn max_freq(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.freq))
    }

    /// Re-applies canonicalization; a no-op on any value produced by this type.
    pub fn canonicalized(&self) -> Self {
        Self::from_canonical(self.terms.clone())
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.evaluate(t)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_canonical(
            self.terms
                .iter()
                .map(|t| TrigTerm { coeff: t.coeff * s, ..*t })
                .collect(),
        )
    }

    /// `t -> f(s t)` for `s > 0`.
    pub fn rescale_time(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("time scale must be positive, got {s}")));
        }
        Ok(Self::from_canonical(
            self.terms
                .iter()
                .map(|t| TrigTerm {
                    coeff: t.coeff * s.powi(t.power as i32),
                    freq: t.freq * s,
                    ..*t
                })
                .collect(),
        ))
    }

    pub fn differentiate(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.power > 0 {
                out.push(TrigTerm {
                    coeff: t.coeff * t.power as f64,
                    power: t.power - 1,
                    ..*t
                });
            }
            if t.freq != 0.0 {
                let (coeff, kind) = match t.kind {
                    Kind::Cos => (-t.coeff * t.freq, Kind::Sin),
                    Kind::Sin => (t.coeff * t.freq, Kind::Cos),
                };
                out.push(TrigTerm { coeff, kind, ..*t });
            }
        }
        Self::from_canonical(out)
    }

    /// Exact product via product-to-sum identities.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let power = self.max_power() + other.max_power();
        if !self.is_zero() && !other.is_zero() && power > MAX_POWER {
            return Err(Error::PowerOverflow {
                power,
                max: MAX_POWER,
            });
        }
        let mut out = Vec::with_capacity(2 * self.terms.len() * other.terms.len());
        for x in &self.terms {
            for y in &other.terms {
                for (c, f, k) in product_to_sum(x, y) {
                    out.push(TrigTerm::new(c * x.coeff * y.coeff, x.power + y.power, f, k));
                }
            }
        }
        Ok(Self::from_canonical(out))
    }

    /// Exact value of `int_0^T f(t) dt`.
    pub fn integrate_0t(&self, horizon: Horizon) -> f64 {
        let t_end = horizon.get();
        let mut acc = TwoFloat::from(0.0);
        for t in &self.terms {
            acc += base_integral(t.power, t.freq, t.kind, t_end) * t.coeff;
        }
        f64::from(acc)
    }
}

/// Exact `int_0^T f g dt` without materializing the product.
///
/// Equals `f.multiply(g)?.integrate_0t(T)` but never fails on the power cap
/// and keeps coefficient products in double-double precision.
pub fn inner(f: &TrigPoly, g: &TrigPoly, horizon: Horizon) -> f64 {
    let t_end = horizon.get();
    let mut acc = TwoFloat::from(0.0);
    for x in &f.terms {
        for y in &g.terms {
            let c = TwoFloat::new_mul(x.coeff, y.coeff);
            let p = x.power + y.power;
            for (w, freq, kind) in product_to_sum(x, y) {
                acc += c * w * base_integral(p, freq, kind, t_end);
            }
        }
    }
    f64::from(acc)
}

/// `||f||^2_{L^2(0,T)}`.
pub fn l2_norm_sq(f: &TrigPoly, horizon: Horizon) -> f64 {
    inner(f, f, horizon)
}

/// The (up to) two `(weight, freq, kind)` terms of `kind_x(a t) kind_y(b t)`,
/// with nonnegative output frequencies.
fn product_to_sum(x: &TrigTerm, y: &TrigTerm) -> [(f64, f64, Kind); 2] {
    let (a, b) = (x.freq, y.freq);
    let sum = a + b;
    let diff = if freqs_equal(a, b) { 0.0 } else { a - b };
    // sin(-d t) = -sin(d t); cos is even.
    let (diff_abs, diff_sign) = if diff < 0.0 { (-diff, -1.0) } else { (diff, 1.0) };
    match (x.kind, y.kind) {
        (Kind::Cos, Kind::Cos) => [(0.5, diff_abs, Kind::Cos), (0.5, sum, Kind::Cos)],
        (Kind::Sin, Kind::Sin) => [(0.5, diff_abs, Kind::Cos), (-0.5, sum, Kind::Cos)],
        (Kind::Sin, Kind::Cos) => [(0.5, sum, Kind::Sin), (0.5 * diff_sign, diff_abs, Kind::Sin)],
        (Kind::Cos, Kind::Sin) => [(0.5, sum, Kind::Sin), (-0.5 * diff_sign, diff_abs, Kind::Sin)],
    }
}

/// `int_0^T t^p kind(a t) dt`.
fn base_integral(power: u32, freq: f64, kind: Kind, t_end: f64) -> TwoFloat {
    let scale = TwoFloat::from(t_end).powi(power as i32 + 1);
    if freq == 0.0 {
        return match kind {
            Kind::Cos => scale / (power as f64 + 1.0),
            Kind::Sin => TwoFloat::from(0.0),
        };
    }
    let moment = oscillatory_moment(power, freq * t_end);
    match kind {
        Kind::Cos => scale * moment.re,
        Kind::Sin => scale * moment.im,
    }
}

/// Complex number with double-double parts, for the moment recurrences.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moment {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl Moment {
    fn unit(omega: f64) -> Self {
        Moment {
            re: TwoFloat::from(omega.cos()),
            im: TwoFloat::from(omega.sin()),
        }
    }

    fn sub(self, o: Self) -> Self {
        Moment {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }

    fn scale(self, k: f64) -> Self {
        Moment {
            re: self.re * k,
            im: self.im * k,
        }
    }

    fn div(self, k: f64) -> Self {
        Moment {
            re: self.re / k,
            im: self.im / k,
        }
    }

    /// `self * i w`.
    fn mul_i(self, w: f64) -> Self {
        Moment {
            re: -(self.im * w),
            im: self.re * w,
        }
    }

    /// `self / (i w)`.
    fn div_i(self, w: f64) -> Self {
        Moment {
            re: self.im / w,
            im: -(self.re / w),
        }
    }

    #[cfg(test)]
    fn to_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(f64::from(self.re), f64::from(self.im))
    }
}

/// `J_p(w) = int_0^1 s^p e^{i w s} ds`.
pub(crate) fn oscillatory_moment(p: u32, omega: f64) -> Moment {
    if omega >= (p as f64).max(1.0) {
        moment_forward(p, omega)
    } else {
        moment_backward(p, omega)
    }
}

/// `J_k = (e - k J_{k-1}) / (i w)`; error amplification `k / w` per step.
fn moment_forward(p: u32, omega: f64) -> Moment {
    let e = Moment::unit(omega);
    let one = Moment {
        re: TwoFloat::from(1.0),
        im: TwoFloat::from(0.0),
    };
    let mut j = e.sub(one).div_i(omega);
    for k in 1..=p {
        j = e.sub(j.scale(k as f64)).div_i(omega);
    }
    j
}

/// `J_{k-1} = (e - i w J_k) / k`; damping `w / k` per step. The start index
/// is pushed up until the seed error is damped below 1e-34.
fn moment_backward(p: u32, omega: f64) -> Moment {
    let e = Moment::unit(omega);
    let mut n = p;
    let mut damping = 1.0;
    while damping > 1e-34 || n < p + 4 {
        n += 1;
        damping *= omega / n as f64;
    }
    let mut j = e.div(n as f64 + 1.0);
    for k in (p + 1..=n).rev() {
        j = e.sub(j.mul_i(omega)).div(k as f64);
    }
    j
}

fn canonicalize(mut terms: Vec<TrigTerm>) -> Vec<TrigTerm> {
    terms.retain(|t| t.coeff != 0.0 && !(t.kind == Kind::Sin && t.freq == 0.0));
    if terms.is_empty() {
        return terms;
    }
    terms.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    // Snap each run of tolerance-equal frequencies onto its smallest member.
    let mut i = 0;
    while i < terms.len() {
        let rep = terms[i].freq;
        let mut j = i + 1;
        while j < terms.len() && freqs_equal(rep, terms[j].freq) {
            terms[j].freq = rep;
            j += 1;
        }
        i = j;
    }
    terms.sort_by(TrigTerm::key_cmp);

    let mut merged: Vec<TrigTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match merged.last_mut() {
            Some(last) if last.key_cmp(&t) == Ordering::Equal => last.coeff += t.coeff,
            _ => merged.push(t),
        }
    }
    let max = merged.iter().fold(0.0_f64, |m, t| m.max(t.coeff.abs()));
    merged.retain(|t| t.coeff != 0.0 && t.coeff.abs() >= COEFF_REL_DROP * max);
    merged
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            match t.power {
                0 => {}
                1 => write!(f, "*t")?,
                p => write!(f, "*t^{p}")?,
            }
            if t.freq != 0.0 {
                let name = match t.kind {
                    Kind::Cos => "cos",
                    Kind::Sin => "sin",
                };
                write!(f, "*{name}({}*t)", t.freq)?;
            }
        }
        Ok(())
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        TrigPoly::from_canonical(terms)
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().map(|t| TrigTerm { coeff: -t.coeff, ..*t }));
        TrigPoly::from_canonical(terms)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: f64) -> TrigPoly {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for TrigPoly {
            type Output = TrigPoly;
            fn $m(self, rhs: TrigPoly) -> TrigPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
