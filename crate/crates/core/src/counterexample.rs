//! The graph-space element with unbounded second time derivative.
//!
//! With `v_j(t) = int_0^t s sin(sqrt(mu_j) s) ds`, the series
//! `u = sum_j phi_j mu_j^(-d/4-1/2) v_j` has `u, ∂_t u, ∇u, □u` square
//! integrable while `||∂_tt u_M||²` grows like the harmonic series. The
//! temporal norms of `v_j` are available in closed form; this module evaluates
//! them, assembles partial sums and fits the divergence rate.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use twofloat::TwoFloat;

use crate::eigenbasis::{enumerate_eigenpairs, BoxDomain, Eigenpair};
use crate::error::{invalid, Result};
use crate::oracle::{reduce_squares, Mode, ModeSquares, NormReport, SpaceTimeField};
use crate::par::Exec;
use crate::timefun::{l2_norm_sq, Horizon, TrigPoly};

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    pub domain: BoxDomain,
    pub horizon: Horizon,
    /// Number of modes in the partial sum.
    pub modes: usize,
}

impl CounterexampleConfig {
    pub fn new(domain: BoxDomain, horizon: Horizon, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("partial sum needs M >= 1"));
        }
        Ok(CounterexampleConfig {
            domain,
            horizon,
            modes,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Squared `L²(0, T)` quantities of `v_j` for one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeNormSet {
    pub vj_sq: f64,
    pub dt_vj_sq: f64,
    pub dtt_vj_sq: f64,
    /// `||v_j'' + mu v_j||² = 2T - sin(2T sqrt(mu)) / sqrt(mu)`.
    pub box_term: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("mu must be positive, got {mu}")))
    }
}

/// `v(t) = (sin(a t) - a t cos(a t)) / mu` with `a = sqrt(mu)`.
pub fn v_closed_form(mu: f64) -> Result<TrigPoly> {
    check_mu(mu)?;
    let a = mu.sqrt();
    Ok(&TrigPoly::sin(1.0 / mu, 0, a)? + &TrigPoly::cos(-a / mu, 1, a)?)
}

/// The four temporal norms, evaluated term by term from their closed forms.
pub fn closed_form_norms(mu: f64, horizon: Horizon) -> Result<ModeNormSet> {
    check_mu(mu)?;
    let t = horizon.get();
    let a = mu.sqrt();
    let (s, c) = (2.0 * t * a).sin_cos();
    let (t2, t3) = (t * t, t * t * t);
    let mu2 = mu * mu;
    let mu32 = mu * a;
    let mu52 = mu2 * a;

    let vj_sq = t3 / (6.0 * mu) + t2 * s / (4.0 * mu32) + t / (2.0 * mu2) - 5.0 * s / (8.0 * mu52)
        + 3.0 * t * c / (4.0 * mu2);
    let dt_vj_sq = -t2 * s / (4.0 * a) + s / (8.0 * mu32) - t * c / (4.0 * mu) + t3 / 6.0;
    let dtt_vj_sq = t3 * mu / 6.0 + 0.25 * t2 * a * s - s / (8.0 * a) - 0.25 * t * c + t / 2.0;
    let box_term = 2.0 * t - s / a;
    Ok(ModeNormSet {
        vj_sq,
        dt_vj_sq,
        dtt_vj_sq,
        box_term,
    })
}

/// The same four quantities by exact integration of [`v_closed_form`].
pub fn integrated_norms(mu: f64, horizon: Horizon) -> Result<ModeNormSet> {
    let v = v_closed_form(mu)?;
    let dv = v.differentiate();
    let ddv = dv.differentiate();
    Ok(ModeNormSet {
        vj_sq: l2_norm_sq(&v, horizon),
        dt_vj_sq: l2_norm_sq(&dv, horizon),
        dtt_vj_sq: l2_norm_sq(&ddv, horizon),
        box_term: l2_norm_sq(&(&ddv + &v.scale(mu)), horizon),
    })
}

/// Modal weight `mu^(-d/4-1/2)` of `u`.
fn amplitude(mu: f64, d: usize) -> f64 {
    mu.powf(-(d as f64) / 4.0 - 0.5)
}

fn weighted_squares(pair: &Eigenpair, d: usize, horizon: Horizon) -> Result<ModeSquares> {
    let n = closed_form_norms(pair.mu, horizon)?;
    let w = pair.mu.powf(-(d as f64) / 2.0 - 1.0);
    Ok(ModeSquares {
        l2: w * n.vj_sq,
        dt: w * n.dt_vj_sq,
        grad: w * pair.mu * n.vj_sq,
        box_: w * n.box_term,
        dtt: w * n.dtt_vj_sq,
    })
}

/// `u_M` as a modal field, with its norms assembled from the closed forms.
pub fn partial_sum(config: &CounterexampleConfig) -> Result<(SpaceTimeField, NormReport)> {
    let d = config.dim();
    let pairs = enumerate_eigenpairs(&config.domain, config.modes)?;
    let modes = pairs
        .iter()
        .map(|p| {
            Ok(Mode {
                pair: p.clone(),
                coeff: v_closed_form(p.mu)?.scale(amplitude(p.mu, d)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let field = SpaceTimeField::new(config.domain.clone(), config.horizon, modes)?;
    let report = partial_sum_norms(config, Exec::default())?;
    Ok((field, report))
}

/// Norms of `u_M` from the closed forms only.
pub fn partial_sum_norms(config: &CounterexampleConfig, exec: Exec) -> Result<NormReport> {
    let rows = series_norms(&config.domain, config.horizon, &[config.modes], exec)?;
    Ok(rows[0].report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub modes: usize,
    pub report: NormReport,
}

/// Norms of `u_M` for every `M` in the strictly increasing `m_list`,
/// from a single pass over the modes.
pub fn series_norms(
    domain: &BoxDomain,
    horizon: Horizon,
    m_list: &[usize],
    exec: Exec,
) -> Result<Vec<SeriesRow>> {
    if m_list.is_empty() {
        return Err(invalid("M list is empty"));
    }
    if m_list[0] == 0 {
        return Err(invalid("partial sums need M >= 1"));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("M list must be strictly increasing"));
    }
    let d = domain.dim();
    let pairs = enumerate_eigenpairs(domain, *m_list.last().unwrap())?;
    let terms = exec.try_map(&pairs, |p| weighted_squares(p, d, horizon))?;

    let z = || TwoFloat::from(0.0);
    let (mut l2, mut dt, mut grad, mut bx, mut dtt) = (z(), z(), z(), z(), z());
    let mut rows = Vec::with_capacity(m_list.len());
    let mut next = m_list.iter().peekable();
    for (i, p) in terms.iter().enumerate() {
        l2 += p.l2;
        dt += p.dt;
        grad += p.grad;
        bx += p.box_;
        dtt += p.dtt;
        if next.peek() == Some(&&(i + 1)) {
            next.next();
            rows.push(SeriesRow {
                modes: i + 1,
                report: reduce_squares([ModeSquares {
                    l2: f64::from(l2),
                    dt: f64::from(dt),
                    grad: f64::from(grad),
                    box_: f64::from(bx),
                    dtt: f64::from(dtt),
                }]),
            });
        }
    }
    Ok(rows)
}

/// Differences of the convergent components between consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increments {
    pub l2_sq: f64,
    pub dt_sq: f64,
    pub grad_sq: f64,
    pub box_sq: f64,
}

impl Increments {
    fn between(a: &NormReport, b: &NormReport) -> Self {
        Increments {
            l2_sq: b.l2_sq() - a.l2_sq(),
            dt_sq: b.dt_sq() - a.dt_sq(),
            grad_sq: b.grad_sq() - a.grad_sq(),
            box_sq: b.box_sq() - a.box_sq(),
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.l2_sq, self.dt_sq, self.grad_sq, self.box_sq]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceDiagnostic {
    pub rows: Vec<SeriesRow>,
    /// Least-squares slope of `||∂_tt u_M||²` against `ln M`.
    pub slope: f64,
    /// `T³ L / (6 pi)`, the leading-order slope on an interval of length `L`.
    /// `None` for `d > 1`, where no constant is claimed.
    pub reference_slope: Option<f64>,
    pub increments: Vec<Increments>,
}

impl DivergenceDiagnostic {
    /// `|slope / reference - 1|`, when a reference exists.
    pub fn slope_rel_error(&self) -> Option<f64> {
        self.reference_slope.map(|r| (self.slope / r - 1.0).abs())
    }

    /// Relative change of `l2², dt², grad², box²` over the last row pair.
    pub fn last_relative_change(&self) -> [f64; 4] {
        let n = self.rows.len();
        let last = &self.rows[n - 1].report;
        let inc = Increments::between(&self.rows[n - 2].report, last);
        let base = [last.l2_sq(), last.dt_sq(), last.grad_sq(), last.box_sq()];
        let mut out = [0.0; 4];
        for (o, (i, b)) in out.iter_mut().zip(inc.as_array().into_iter().zip(base)) {
            *o = (i / b).abs();
        }
        out
    }

    /// Increments of each convergent component never grow along the list.
    pub fn increments_nonincreasing(&self) -> bool {
        self.increments.windows(2).all(|w| {
            w[0].as_array()
                .into_iter()
                .zip(w[1].as_array())
                .all(|(a, b)| b <= a)
        })
    }

    /// `||∂_tt u_M||²` strictly increases along the list.
    pub fn dtt_strictly_increasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].report.dtt_sq() > w[0].report.dtt_sq())
    }
}

pub fn divergence_diagnostic(
    domain: &BoxDomain,
    horizon: Horizon,
    m_list: &[usize],
    exec: Exec,
) -> Result<DivergenceDiagnostic> {
    if m_list.len() < 4 {
        return Err(invalid(format!(
            "divergence fit needs at least 4 values of M, got {}",
            m_list.len()
        )));
    }
    let rows = series_norms(domain, horizon, m_list, exec)?;
    let x: Vec<f64> = rows.iter().map(|r| (r.modes as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.report.dtt_sq()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();

    let t = horizon.get();
    let reference_slope = (domain.dim() == 1).then(|| t * t * t * domain.edges()[0] / (6.0 * PI));
    let increments = rows
        .windows(2)
        .map(|w| Increments::between(&w[0].report, &w[1].report))
        .collect();
    Ok(DivergenceDiagnostic {
        rows,
        slope: sxy / sxx,
        reference_slope,
        increments,
    })
}

pub const SERIES_CSV_HEADER: &str = "M,l2_sq,dt_sq,grad_sq,box_sq,dtt_sq,ln_M";

pub fn write_series_csv(rows: &[SeriesRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SERIES_CSV_HEADER}")?;
    for r in rows {
        let n = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.modes,
            n.l2_sq(),
            n.dt_sq(),
            n.grad_sq(),
            n.box_sq(),
            n.dtt_sq(),
            (r.modes as f64).ln()
        )?;
    }
    out.flush()?;
    Ok(())
}
