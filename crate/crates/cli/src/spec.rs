use std::fmt;
use std::str::FromStr;

use contact_gap::estimators::MCConfig;
use contact_gap::lattice::LocalFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Version of the manifest layout; bump on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GapExact,
    Duality,
    FiniteDuality,
    Extinction,
    Growth,
    Discrepancy,
    Cluster,
    Variance,
    FppDomination,
    TvConvergence,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::GapExact,
        Experiment::Duality,
        Experiment::FiniteDuality,
        Experiment::Extinction,
        Experiment::Growth,
        Experiment::Discrepancy,
        Experiment::Cluster,
        Experiment::Variance,
        Experiment::FppDomination,
        Experiment::TvConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GapExact => "gap-exact",
            Experiment::Duality => "duality",
            Experiment::FiniteDuality => "finite-duality",
            Experiment::Extinction => "extinction",
            Experiment::Growth => "growth",
            Experiment::Discrepancy => "discrepancy",
            Experiment::Cluster => "cluster",
            Experiment::Variance => "variance",
            Experiment::FppDomination => "fpp-domination",
            Experiment::TvConvergence => "tv-convergence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

/// Experiment-specific parameters. Every field is optional in a config
/// file; [`ExperimentSpec::resolve`] fills the defaults that the chosen
/// experiment reads and clears the rest, so a manifest lists exactly what
/// the run used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Window radii `N` for `gap-exact`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<usize>>,
    /// Initial set `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<i64>>>,
    /// Target set `B` for `duality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<i64>>>,
    /// Initial configuration `η` inside `Λ_N` for `finite-duality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Vec<i64>>>,
    /// Window radius `N` for `finite-duality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Observation time for the duality experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Box sides for `extinction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<usize>>,
    /// Flipped site for `discrepancy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<i64>>,
    /// Observed sites for `discrepancy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<i64>>>,
    /// Named test function for `variance`: `origin`, `pair`, `count` or
    /// `antisymmetric`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// Explicit test function: support points and a table indexed by the
    /// bitmask of infected support points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
    /// Offsets along `e_1` for `fpp-domination`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<i64>>,
    /// Times for `fpp-domination`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<f64>>,
    /// Tail-fit threshold speed for `fpp-domination`; defaults to `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    /// Probe radius `L` for `tv-convergence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Window radii `N` for `tv-convergence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
}

/// A fully resolved experiment: what to run and with which settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub mc: MCConfig,
    #[serde(default)]
    pub params: Params,
}

/// The grid `0, step, 2·step, …`, closed with `horizon` itself.
pub fn default_grid(horizon: f64, step: f64) -> Vec<f64> {
    let k = (horizon / step).floor() as usize;
    let mut g: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
    if g.last().is_some_and(|&t| t < horizon) {
        g.push(horizon);
    }
    g
}

pub const DEFAULT_REPLICAS: usize = 10_000;
pub const DEFAULT_HORIZON: f64 = 8.0;
pub const GRID_STEP: f64 = 0.5;

pub fn default_mc() -> MCConfig {
    MCConfig::new(1, 2.0, DEFAULT_REPLICAS, 0, default_grid(DEFAULT_HORIZON, GRID_STEP))
}

fn origin(dim: usize) -> Vec<i64> {
    vec![0; dim]
}

fn along_first(dim: usize, k: i64) -> Vec<i64> {
    let mut p = vec![0; dim];
    p[0] = k;
    p
}

impl ExperimentSpec {
    /// Fill the defaults the experiment reads, drop parameters it ignores,
    /// and check the result.
    pub fn resolve(experiment: Experiment, mc: MCConfig, given: Params) -> Result<Self, CliError> {
        let d = mc.dim;
        let t_max = mc.t_max();
        let g = given;
        let mut p = Params::default();
        match experiment {
            Experiment::GapExact => p.radii = Some(g.radii.unwrap_or_else(|| vec![0, 1, 2, 3])),
            Experiment::Duality => {
                p.a = Some(g.a.unwrap_or_else(|| vec![origin(d)]));
                p.b = Some(g.b.unwrap_or_else(|| vec![along_first(d, 2), along_first(d, 3)]));
                p.t = Some(g.t.unwrap_or(t_max));
            }
            Experiment::FiniteDuality => {
                p.n = Some(g.n.unwrap_or(1));
                p.eta = Some(g.eta.unwrap_or_else(|| vec![origin(d)]));
                p.a = Some(g.a.unwrap_or_else(|| vec![along_first(d, 1)]));
                p.t = Some(g.t.unwrap_or(t_max));
            }
            Experiment::Extinction => p.sides = Some(g.sides.unwrap_or_else(|| vec![1, 2, 3, 4, 5, 6])),
            Experiment::Growth | Experiment::Cluster => {}
            Experiment::Discrepancy => {
                p.x = Some(g.x.unwrap_or_else(|| origin(d)));
                p.targets = Some(g.targets.unwrap_or_else(|| (0..=4).map(|k| along_first(d, k)).collect()));
            }
            Experiment::Variance => {
                if g.support.is_some() || g.table.is_some() {
                    if g.function.is_some() {
                        return Err(CliError::Config("give either `function` or `support` and `table`".into()));
                    }
                    p.support = g.support;
                    p.table = g.table;
                } else {
                    p.function = Some(g.function.unwrap_or_else(|| "origin".into()));
                }
            }
            Experiment::FppDomination => {
                p.ys = Some(g.ys.unwrap_or_else(|| vec![0, 1, 2, 3, 4, 5, 6, 8, 10]));
                p.ts = Some(g.ts.unwrap_or_else(|| vec![0.5, 1.0, 2.0]));
                p.c3 = Some(g.c3.unwrap_or(mc.lambda));
            }
            Experiment::TvConvergence => {
                p.l = Some(g.l.unwrap_or(1));
                p.n_grid = Some(g.n_grid.unwrap_or_else(|| vec![2, 4, 8]));
            }
        }
        let spec = ExperimentSpec { experiment, mc, params: p };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.experiment != Experiment::GapExact {
            self.mc.validate()?;
        } else if !(self.mc.lambda >= 0.0 && self.mc.lambda.is_finite()) {
            return Err(CliError::Config(format!("invalid λ {}", self.mc.lambda)));
        }
        if self.experiment == Experiment::Variance {
            self.function()?;
        }
        Ok(())
    }

    /// The test function of a `variance` run.
    pub fn function(&self) -> Result<LocalFunction, CliError> {
        let d = self.mc.dim;
        let p = &self.params;
        if let (Some(support), Some(table)) = (&p.support, &p.table) {
            let support = support.clone();
            if table.len() != 1 << support.len() {
                return Err(CliError::Config(format!(
                    "table needs {} entries for {} support points",
                    1usize << support.len(),
                    support.len()
                )));
            }
            return Ok(LocalFunction::from_real_fn(support, |m| table[m as usize])?);
        }
        let name = p.function.as_deref().unwrap_or("origin");
        let f = match name {
            "origin" => LocalFunction::indicator(origin(d)),
            "pair" => LocalFunction::from_real_fn(vec![origin(d), along_first(d, 1)], |m| (m == 3) as u8 as f64)?,
            "count" => LocalFunction::infected_count(vec![along_first(d, -1), origin(d), along_first(d, 1)])?,
            "antisymmetric" => {
                LocalFunction::from_real_fn(vec![along_first(d, -1), along_first(d, 1)], |m| {
                    (m & 1) as f64 - (m >> 1 & 1) as f64
                })?
            }
            other => return Err(CliError::Config(format!("unknown test function `{other}`"))),
        };
        Ok(f)
    }
}
