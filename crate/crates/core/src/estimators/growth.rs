use serde::{Deserialize, Serialize};

use super::config::MCConfig;
use super::extinction::run_from;
use super::fit::{fit_linear, FitResult};
use super::runner::run_replicas;
use super::series::{bernoulli, mean_estimate, quantile_estimate, Estimate, EstimateSeries};
use crate::error::{Error, Result};

/// Fewest surviving replicas a growth report accepts.
pub const MIN_SURVIVORS: usize = 50;
/// Quantile of `|ξ_t|` reported among survivors.
pub const GROWTH_QUANTILE: f64 = 0.05;

/// Result of [`growth_given_survival`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub horizon: f64,
    pub survivors: usize,
    /// 5th percentile of `|ξ^0_t|` among replicas alive at the horizon.
    pub quantile: EstimateSeries,
    /// Mean of `|ξ^0_t|` among the same replicas.
    pub mean: EstimateSeries,
    /// `P(alive at T)` and `P(alive at 2T)`; the survival proxy is stable
    /// when the two agree.
    pub survival: [Estimate; 2],
    pub fit: Option<FitResult>,
}

/// Size of a single infection at the grid times, conditioned on being alive
/// at the survival horizon `T`.
pub fn growth_given_survival(cfg: &MCConfig) -> Result<GrowthReport> {
    cfg.validate()?;
    let horizon = cfg.survival_horizon();
    let end = 2.0 * horizon;
    let origin = vec![vec![0i64; cfg.dim]];
    let geom = cfg.geometry(0, end)?;
    let mut probes = cfg.t_grid.clone();
    probes.push(horizon);
    probes.push(end);
    let runs = run_replicas(cfg.replicas, |i| {
        let traj = run_from(cfg, "growth", i, &[], &origin, &geom, probes.clone(), end)?;
        Ok(traj.counts())
    })?;
    let k = cfg.t_grid.len();
    let survivors: Vec<&Vec<usize>> = runs.iter().filter(|c| c[k] > 0).collect();
    let alive_2t = runs.iter().filter(|c| c[k + 1] > 0).count();
    if survivors.len() < MIN_SURVIVORS {
        return Err(Error::TooFewSurvivors {
            survivors: survivors.len(),
            required: MIN_SURVIVORS,
        });
    }
    let mut quantile = EstimateSeries::new("q05_size_given_survival");
    let mut mean = EstimateSeries::new("mean_size_given_survival");
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let sizes: Vec<f64> = survivors.iter().map(|c| c[j] as f64).collect();
        quantile.push(quantile_estimate(t, &sizes, GROWTH_QUANTILE));
        mean.push(mean_estimate(t, &sizes));
    }
    Ok(GrowthReport {
        horizon,
        survivors: survivors.len(),
        fit: fit_linear(&quantile, cfg.t_min).ok(),
        quantile,
        mean,
        survival: [
            bernoulli(horizon, survivors.len(), cfg.replicas),
            bernoulli(end, alive_2t, cfg.replicas),
        ],
    })
}
