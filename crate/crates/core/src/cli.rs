//! Batch runner behind the `wavegraph` binary.
//!
//! A run is described by an optional TOML file:
//!
//! ```toml
//! command = "counterexample"
//! [domain]
//! edges = [1.0]
//! [time]
//! T = 1.0
//! [modes]
//! J = 32
//! K = 12
//! M_list = [32, 64, 128, 256]
//! [run]
//! out = "results"
//! seed = 1
//! ```
//!
//! Command-line flags override file values. Every run writes `summary.txt`
//! (seed header plus one PASS/FAIL line per check), `checks.csv` and the
//! command's own table.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::counterexample::{divergence_diagnostic, partial_sum, write_series_csv, CounterexampleConfig};
use crate::dualnorm::{infsup_scan, write_infsup_csv, DEFAULT_TEST_DIM};
use crate::eigenbasis::{enumerate_eigenpairs, weyl_ratio, BoxDomain};
use crate::error::{Error, Result};
use crate::lsq::{build_trial_space, convergence_table, solve, write_convergence_csv, MAX_TEMPORAL_DIM};
use crate::oracle::{apply_box, norms};
use crate::par::Exec;
use crate::suite::{self, Check, SourceShape};
use crate::timefun::Horizon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Random-source identities and inequalities.
    Verify,
    /// Partial sums of the non-H² series and the divergence fit.
    Counterexample,
    /// Least-squares refinement in K with a known exact solution.
    Lsq,
    /// Stability ratio of the H¹ formulation along resonant data.
    Infsup,
    /// Weyl bracket and lattice counting.
    Weyl,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Counterexample => "counterexample",
            Command::Lsq => "lsq",
            Command::Infsup => "infsup",
            Command::Weyl => "weyl",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(default)]
    domain: DomainSection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    modes: ModesSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    edges: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    #[serde(rename = "T")]
    t: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModesSection {
    #[serde(rename = "J")]
    j: Option<i64>,
    #[serde(rename = "K")]
    k: Option<i64>,
    #[serde(rename = "M_list")]
    m_list: Option<Vec<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    out: Option<PathBuf>,
    seed: Option<u64>,
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub modes: Option<usize>,
    pub temporal_dim: Option<usize>,
    pub m_list: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub domain: BoxDomain,
    pub horizon: Horizon,
    /// `J`: source modes (verify), trial modes (lsq), largest rank (infsup),
    /// enumerated eigenpairs (weyl).
    pub modes: usize,
    /// `K`: temporal trial or test dimension.
    pub temporal_dim: usize,
    pub m_list: Vec<usize>,
    pub out: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 1;
pub const WEYL_J_MIN: usize = 100;

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn count(field: &str, v: i64) -> Result<usize> {
    if v < 1 {
        return Err(config_err(field, format!("must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

impl RunConfig {
    /// Merges defaults, the optional TOML text and the overrides, in that order.
    pub fn resolve(command: Option<Command>, toml_text: Option<&str>, ov: Overrides) -> Result<Self> {
        let file: FileConfig = match toml_text {
            Some(text) => toml::from_str(text).map_err(|e| {
                let msg = e.message().to_string();
                let field = msg
                    .split('`')
                    .nth(1)
                    .filter(|_| msg.starts_with("unknown field"))
                    .unwrap_or("config");
                config_err(field, msg.trim())
            })?,
            None => FileConfig::default(),
        };
        let command = command
            .or(file.command)
            .ok_or_else(|| config_err("command", "no command given"))?;

        let edges = file.domain.edges.unwrap_or_else(|| match command {
            Command::Weyl => vec![1.0, 1.0],
            _ => vec![1.0],
        });
        let domain = BoxDomain::new(edges).map_err(|e| config_err("domain.edges", e.to_string()))?;

        let t = ov.horizon.or(file.time.t).unwrap_or(1.0);
        let horizon = Horizon::new(t).map_err(|e| config_err("time.T", e.to_string()))?;

        let modes = match (ov.modes, file.modes.j) {
            (Some(j), _) => count("modes.J", j as i64)?,
            (None, Some(j)) => count("modes.J", j)?,
            (None, None) => match command {
                Command::Verify => 20,
                Command::Counterexample => 1,
                Command::Lsq => 4,
                Command::Infsup => 32,
                Command::Weyl => 40_000,
            },
        };
        let temporal_dim = match (ov.temporal_dim, file.modes.k) {
            (Some(k), _) => count("modes.K", k as i64)?,
            (None, Some(k)) => count("modes.K", k)?,
            (None, None) => match command {
                Command::Verify => 8,
                Command::Lsq => 10,
                _ => DEFAULT_TEST_DIM,
            },
        };
        if temporal_dim > MAX_TEMPORAL_DIM {
            return Err(config_err(
                "modes.K",
                format!("must be at most {MAX_TEMPORAL_DIM}, got {temporal_dim}"),
            ));
        }
        if command == Command::Verify && temporal_dim < 2 {
            return Err(config_err("modes.K", "verify needs K >= 2"));
        }
        if command == Command::Weyl && modes <= WEYL_J_MIN {
            return Err(config_err("modes.J", format!("weyl needs J > {WEYL_J_MIN}")));
        }

        let m_list = match (ov.m_list, file.modes.m_list) {
            (Some(m), _) => m,
            (None, Some(m)) => m
                .into_iter()
                .map(|v| count("modes.M_list", v))
                .collect::<Result<_>>()?,
            (None, None) => (5..=14).map(|k| 1usize << k).collect(),
        };
        if m_list.is_empty() {
            return Err(config_err("modes.M_list", "must not be empty"));
        }
        if m_list.contains(&0) {
            return Err(config_err("modes.M_list", "entries must be positive"));
        }
        if m_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("modes.M_list", "must be strictly increasing"));
        }
        if command == Command::Counterexample && m_list.len() < 4 {
            return Err(config_err("modes.M_list", "needs at least 4 entries"));
        }

        Ok(RunConfig {
            command,
            domain,
            horizon,
            modes,
            temporal_dim,
            m_list,
            out: ov.out.or(file.run.out).unwrap_or_else(|| PathBuf::from("wavegraph-out")),
            seed: ov.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED),
        })
    }

    fn header(&self) -> String {
        let join = |v: &[String]| v.join(",");
        format!(
            "wavegraph {}\nseed = {}\ndomain.edges = {}\ntime.T = {}\nmodes.J = {}\nmodes.K = {}\nmodes.M_list = {}\n",
            self.command.name(),
            self.seed,
            join(&self.domain.edges().iter().map(f64::to_string).collect::<Vec<_>>()),
            self.horizon.get(),
            self.modes,
            self.temporal_dim,
            join(&self.m_list.iter().map(usize::to_string).collect::<Vec<_>>()),
        )
    }
}

/// Checks of a finished run and the files it wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Family size of the verify command.
pub const VERIFY_FAMILY: usize = 100;

/// Runs the command and writes its artifacts under `config.out`.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&config.out)?;
    let exec = Exec::default();
    let mut files = Vec::new();
    let checks = match config.command {
        Command::Verify => {
            let shape = SourceShape {
                max_modes: config.modes,
                ..SourceShape::default()
            };
            let family = suite::random_family(config.seed, VERIFY_FAMILY, &config.domain, &shape)?;
            let solved = suite::solve_family(family)?;
            let few = &solved[..solved.len().min(10)];
            let mut c = suite::check_closed_forms(config.seed, 50)?;
            c.push(suite::check_stability(&solved));
            c.extend(suite::check_lemma(&solved));
            c.extend(suite::check_round_trip(&solved));
            c.push(suite::check_weak_identity(few, 4)?);
            c.extend(suite::check_lsq(config.seed, few, config.temporal_dim)?);
            c.extend(suite::check_dual_norm_bounds(config.seed, 20, 8)?);
            c
        }
        Command::Counterexample => {
            let diag = divergence_diagnostic(&config.domain, config.horizon, &config.m_list, exec)?;
            let path = config.out.join("counterexample.csv");
            write_series_csv(&diag.rows, &path)?;
            files.push(path);
            suite::check_divergence(&diag)
        }
        Command::Lsq => run_lsq(config, &mut files)?,
        Command::Infsup => {
            let ranks: Vec<usize> = (1..=config.modes).collect();
            let rows = infsup_scan(&ranks, &config.domain, config.horizon, config.temporal_dim, exec)?;
            let path = config.out.join("infsup.csv");
            write_infsup_csv(&rows, &path)?;
            files.push(path);
            suite::check_infsup(&rows, config.horizon)?
        }
        Command::Weyl => {
            let eigs = enumerate_eigenpairs(&config.domain, config.modes)?;
            let path = config.out.join("weyl.csv");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(out, "j,mu,weyl_ratio")?;
            for p in &eigs {
                writeln!(out, "{},{},{}", p.rank, p.mu, weyl_ratio(p, config.domain.dim()))?;
            }
            out.flush()?;
            files.push(path);
            let j_check = (config.modes / 4).max(WEYL_J_MIN);
            suite::check_weyl(&config.domain, config.modes, WEYL_J_MIN, j_check)?
        }
    };

    let path = config.out.join("checks.csv");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "check,pass,measured,limit,slack")?;
    for c in &checks {
        writeln!(out, "\"{}\",{},{:e},{:e},{:e}", c.name, c.pass, c.measured, c.limit, c.slack())?;
    }
    out.flush()?;
    files.push(path);

    let path = config.out.join("summary.txt");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "{}", config.header())?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    writeln!(
        out,
        "\nresult: {} ({passed}/{} checks passed)",
        if passed == checks.len() { "PASS" } else { "FAIL" },
        checks.len()
    )?;
    out.flush()?;
    files.push(path);

    Ok(Outcome { checks, files })
}

/// Refinement in `K = 1..config.K` for the data `□u_J` of the series
/// partial sum, whose exact solution `u_J` is known.
fn run_lsq(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<Vec<Check>> {
    let cfg = CounterexampleConfig::new(config.domain.clone(), config.horizon, config.modes)?;
    let (u, _) = partial_sum(&cfg)?;
    let f = apply_box(&u);
    let dims: Vec<usize> = (1..=config.temporal_dim).collect();
    let rows = convergence_table(&f, config.modes, &dims, Some(&u))?;
    let path = config.out.join("lsq_convergence.csv");
    write_convergence_csv(&rows, &path)?;
    files.push(path);

    let rises = rows.windows(2).filter(|w| w[1].residual > w[0].residual).count();
    let sol = solve(&f, &build_trial_space(config.modes, config.temporal_dim, config.horizon)?)?;
    let fn_sq = norms(&f).l2_sq();
    let b = norms(&sol.u_h).box_;
    let pyth = ((b * b + sol.residual * sol.residual) - fn_sq).abs() / fn_sq;
    let first = rows[0].graph_dist_to_oracle.unwrap_or(f64::NAN);
    let last = rows[rows.len() - 1].graph_dist_to_oracle.unwrap_or(f64::NAN);
    Ok(vec![
        Check::at_most("lsq residual nonincreasing in K (violations)", rises as f64, 0.0),
        Check::at_most("lsq Pythagoras at largest K (rel)", pyth, 1e-10),
        Check::at_most("lsq graph distance to exact solution, last / first", last / first, 1.0),
    ])
}

#[derive(Debug, Parser)]
#[command(name = "wavegraph", version, about = "Space-time modal verification runs for the wave equation")]
pub struct Args {
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Time horizon.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Spatial modes (eigenpairs for weyl, last resonant rank for infsup).
    #[arg(long = "J")]
    pub modes: Option<usize>,
    /// Temporal basis dimension, at most 14.
    #[arg(long = "K")]
    pub temporal_dim: Option<usize>,
    /// Comma-separated partial-sum sizes.
    #[arg(long = "M-list", value_delimiter = ',', num_args = 0..)]
    pub m_list: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of the random suites.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Args {
    pub fn into_config(self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => Some(read_config(p)?),
            None => None,
        };
        RunConfig::resolve(
            Some(self.command),
            text.as_deref(),
            Overrides {
                horizon: self.horizon,
                modes: self.modes,
                temporal_dim: self.temporal_dim,
                m_list: self.m_list,
                out: self.out,
                seed: self.seed,
            },
        )
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| config_err("--config", format!("cannot read {}: {e}", path.display())))
}

/// Exit status: 0 when every check passes, 1 on a failed check or a module
/// error, 2 on a usage or configuration error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("wavegraph: {e}");
            return 2;
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{c}");
            }
            println!("wrote {}", config.out.join("summary.txt").display());
            if outcome.all_pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("wavegraph: {e}");
            1
        }
    }
}
