//! Conforming least-squares solver for `□u = f` in the graph space.
//!
//! Trial functions are `phi_j(x) psi_k(t)` with `psi_k(t) = t^2 P_{k-1}(2t/T - 1)`,
//! so every trial function and its time derivative vanish at `t = 0` and the
//! discrete space sits inside the graph space. Because `□(phi_j psi) =
//! phi_j (psi'' + mu_j psi)`, the minimization of `||□u_h - f||_{L²(Q)}`
//! decouples into one small problem per spatial mode, each solved by
//! orthonormalizing the image functions `g_k = psi_k'' + mu psi_k` in the exact
//! `L²(0, T)` inner product and projecting.

use std::io::Write;
use std::path::Path;

use twofloat::TwoFloat;

use crate::error::{invalid, Error, Result};
use crate::gram::{captured, gram_matrix, shifted_legendre, Orthonormal};
use crate::oracle::{box_mode, norms, Mode, SpaceTimeField};
use crate::par::Exec;
use crate::timefun::{inner, l2_norm_sq, Horizon, TrigPoly, TrigTerm, Kind};

/// Largest supported temporal dimension `K`.
pub const MAX_TEMPORAL_DIM: usize = 14;

#[derive(Debug, Clone)]
pub struct TrialSpace {
    modes: usize,
    horizon: Horizon,
    basis: Vec<TrigPoly>,
}

impl TrialSpace {
    /// Number of spatial modes `J`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of temporal functions `K`.
    pub fn temporal_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn basis(&self) -> &[TrigPoly] {
        &self.basis
    }
}

pub fn build_trial_space(modes: usize, temporal_dim: usize, horizon: Horizon) -> Result<TrialSpace> {
    if modes == 0 || temporal_dim == 0 {
        return Err(invalid("trial space needs J >= 1 and K >= 1"));
    }
    if temporal_dim > MAX_TEMPORAL_DIM {
        return Err(Error::Capability(format!(
            "temporal dimension {temporal_dim} exceeds the supported maximum {MAX_TEMPORAL_DIM}"
        )));
    }
    let basis = (0..temporal_dim)
        .map(|i| {
            let legendre = shifted_legendre(i, horizon);
            TrigPoly::from_terms(
                legendre
                    .iter()
                    .enumerate()
                    .map(|(p, &c)| TrigTerm::new(c, p as u32 + 2, 0.0, Kind::Cos)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSpace {
        modes,
        horizon,
        basis,
    })
}

/// Least-squares fit of one mode.
#[derive(Debug, Clone)]
pub struct ModeFit {
    /// Coefficients of `psi_1..psi_K`.
    pub coefficients: Vec<f64>,
    /// `sum_k c_k psi_k`.
    pub solution: TrigPoly,
    /// `||psi'' + mu psi - f||_{L²(0,T)}`, from the explicit residual function.
    pub residual: f64,
    /// `sqrt(max(0, ||f||² - sum_k <f, q_k>²))`.
    pub projected_residual: f64,
    /// Ratio of extreme Gram–Schmidt pivots of the image functions.
    pub condition: f64,
}

pub fn solve_mode_lsq(mu: f64, f: &TrigPoly, space: &TrialSpace) -> Result<ModeFit> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    let horizon = space.horizon;
    let images: Vec<TrigPoly> = space.basis.iter().map(|psi| box_mode(mu, psi)).collect();
    let orth = Orthonormal::factor(gram_matrix(&images, |a, b| inner(a, b, horizon)))?;
    let load: Vec<f64> = images.iter().map(|g| inner(f, g, horizon)).collect();
    let proj = orth.project(&load);
    let coefficients = orth.back_substitute(&proj);
    let solution = combine(&space.basis, &coefficients)?;

    let residual_fn = &box_mode(mu, &solution) - f;
    let residual = l2_norm_sq(&residual_fn, horizon).max(0.0).sqrt();
    let projected = (l2_norm_sq(f, horizon) - captured(&proj)).max(0.0).sqrt();

    Ok(ModeFit {
        coefficients,
        solution,
        residual,
        projected_residual: projected,
        condition: orth.condition(),
    })
}

/// `sum_k c_k psi_k` with each monomial coefficient summed in double-double
/// and rounded once.
fn combine(basis: &[TrigPoly], c: &[f64]) -> Result<TrigPoly> {
    let mut acc: Vec<TwoFloat> = Vec::new();
    for (psi, &ck) in basis.iter().zip(c) {
        for term in psi.terms() {
            debug_assert!(term.freq == 0.0 && term.kind == Kind::Cos);
            let p = term.power as usize;
            if acc.len() <= p {
                acc.resize(p + 1, TwoFloat::from(0.0));
            }
            acc[p] += TwoFloat::new_mul(term.coeff, ck);
        }
    }
    TrigPoly::from_terms(
        acc.iter()
            .enumerate()
            .map(|(p, &a)| TrigTerm::new(f64::from(a), p as u32, 0.0, Kind::Cos)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDiagnostic {
    pub rank: usize,
    pub residual: f64,
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub u_h: SpaceTimeField,
    /// `||□u_h - f_J||_{L²(Q)}`.
    pub residual: f64,
    pub per_mode: Vec<ModeDiagnostic>,
    /// Ranks of `f` beyond the trial space, excluded from the fit.
    pub dropped_ranks: Vec<usize>,
}

impl LsqSolution {
    /// `f` restricted to the trial modes.
    pub fn truncated_source(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        let keep: Vec<Mode> = f
            .modes()
            .iter()
            .filter(|m| !self.dropped_ranks.contains(&m.pair.rank))
            .cloned()
            .collect();
        SpaceTimeField::new(f.domain().clone(), f.horizon(), keep)
    }
}

pub fn solve(f: &SpaceTimeField, space: &TrialSpace) -> Result<LsqSolution> {
    solve_with(f, space, Exec::default())
}

pub fn solve_with(f: &SpaceTimeField, space: &TrialSpace, exec: Exec) -> Result<LsqSolution> {
    if f.horizon() != space.horizon {
        return Err(invalid("source and trial space use different horizons"));
    }
    let (kept, dropped): (Vec<&Mode>, Vec<&Mode>) =
        f.modes().iter().partition(|m| m.pair.rank <= space.modes);
    let fits = exec.try_map(&kept, |m| solve_mode_lsq(m.pair.mu, &m.coeff, space))?;

    let mut residual_sq = TwoFloat::from(0.0);
    let mut per_mode = Vec::with_capacity(fits.len());
    let mut modes = Vec::with_capacity(fits.len());
    for (m, fit) in kept.iter().zip(fits) {
        residual_sq += TwoFloat::new_mul(fit.residual, fit.residual);
        per_mode.push(ModeDiagnostic {
            rank: m.pair.rank,
            residual: fit.residual,
            condition: fit.condition,
        });
        modes.push(Mode {
            pair: m.pair.clone(),
            coeff: fit.solution,
        });
    }
    Ok(LsqSolution {
        u_h: SpaceTimeField::new(f.domain().clone(), f.horizon(), modes)?,
        residual: f64::from(residual_sq).sqrt(),
        per_mode,
        dropped_ranks: dropped.iter().map(|m| m.pair.rank).collect(),
    })
}

/// One row of a refinement study in `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub temporal_dim: usize,
    pub residual: f64,
    pub box_norm_uh: f64,
    /// Graph-norm distance to a known exact solution.
    pub graph_dist_to_oracle: Option<f64>,
}

pub fn convergence_table(
    f: &SpaceTimeField,
    modes: usize,
    temporal_dims: &[usize],
    oracle: Option<&SpaceTimeField>,
) -> Result<Vec<ConvergenceRow>> {
    temporal_dims
        .iter()
        .map(|&k| {
            let space = build_trial_space(modes, k, f.horizon())?;
            let sol = solve(f, &space)?;
            let graph_dist_to_oracle = match oracle {
                Some(u) => Some(norms(&sol.u_h.sub(u)?).graph),
                None => None,
            };
            Ok(ConvergenceRow {
                temporal_dim: k,
                residual: sol.residual,
                box_norm_uh: norms(&sol.u_h).box_,
                graph_dist_to_oracle,
            })
        })
        .collect()
}

pub const CONVERGENCE_CSV_HEADER: &str = "K,residual,box_norm_uh,graph_dist_to_oracle";

pub fn write_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CONVERGENCE_CSV_HEADER}")?;
    for r in rows {
        let dist = r.graph_dist_to_oracle.map(|d| d.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.temporal_dim, r.residual, r.box_norm_uh, dist)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::{enumerate_eigenpairs, BoxDomain};
    use std::f64::consts::PI;

    fn h1() -> Horizon {
        Horizon::new(1.0).unwrap()
    }

    #[test]
    fn first_basis_function_is_t_squared() {
        let s = build_trial_space(1, 1, h1()).unwrap();
        assert_eq!(s.basis()[0], TrigPoly::monomial(1.0, 2).unwrap());
    }

    #[test]
    fn basis_is_conforming() {
        let s = build_trial_space(1, MAX_TEMPORAL_DIM, Horizon::new(2.5).unwrap()).unwrap();
        for psi in s.basis() {
            assert_eq!(psi.evaluate(0.0), 0.0);
            assert_eq!(psi.differentiate().evaluate(0.0), 0.0);
        }
    }

    #[test]
    fn dimension_limits() {
        assert!(matches!(build_trial_space(1, 15, h1()), Err(Error::Capability(_))));
        assert!(build_trial_space(0, 3, h1()).is_err());
        assert!(build_trial_space(1, 0, h1()).is_err());
    }

    #[test]
    fn exact_recovery_of_t_squared() {
        let mu = 7.3;
        let f = TrigPoly::polynomial(&[2.0, 0.0, mu]).unwrap();
        for k in 1..=8 {
            let s = build_trial_space(1, k, h1()).unwrap();
            let fit = solve_mode_lsq(mu, &f, &s).unwrap();
            assert!(fit.residual < 1e-10, "K = {k}: {}", fit.residual);
            assert!((fit.coefficients[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let s = build_trial_space(1, 4, h1()).unwrap();
        let fit = solve_mode_lsq(3.0, &TrigPoly::zero(), &s).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn resonant_datum_residual_decreases() {
        let mu = PI * PI;
        let f = TrigPoly::sin(2.0, 0, PI).unwrap();
        let mut prev = f64::INFINITY;
        for k in 2..=10 {
            let s = build_trial_space(1, k, h1()).unwrap();
            let fit = solve_mode_lsq(mu, &f, &s).unwrap();
            assert!(fit.residual < prev, "K = {k}: {} >= {prev}", fit.residual);
            prev = fit.residual;
        }
    }

    #[test]
    fn truncation_is_reported() {
        let dom = BoxDomain::unit(1).unwrap();
        let pairs = enumerate_eigenpairs(&dom, 3).unwrap();
        let f = SpaceTimeField::new(
            dom,
            h1(),
            pairs
                .iter()
                .map(|p| Mode { pair: p.clone(), coeff: TrigPoly::constant(1.0) })
                .collect(),
        )
        .unwrap();
        let s = build_trial_space(2, 3, h1()).unwrap();
        let sol = solve(&f, &s).unwrap();
        assert_eq!(sol.dropped_ranks, vec![3]);
        assert_eq!(sol.u_h.modes().len(), 2);
        assert_eq!(sol.truncated_source(&f).unwrap().modes().len(), 2);
    }
}
