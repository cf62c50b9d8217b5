use serde::{Deserialize, Serialize};

use super::config::MCConfig;
use super::fit::{fit_exponential, FitResult};
use super::runner::{guarded, mu_sample, run_replicas};
use super::series::{bernoulli, mean_estimate, EstimateSeries};
use crate::error::{Error, Result};
use crate::graphical::{evolve_coupled, EvolveConfig, LightConeTarget};

/// Per replica: disagreement indicators `[t][target]` and `|Δ_t|` per time.
struct FlipRun {
    disagree: Vec<Vec<bool>>,
    delta: Vec<usize>,
}

fn sup(p: &[i64]) -> usize {
    p.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
}

/// Couple `ξ^η` and `ξ^{η^x}` through one stream, with `η` a μ-sample.
fn flip_runs(cfg: &MCConfig, x: &[i64], targets: &[Vec<i64>], experiment: &str) -> Result<Vec<FlipRun>> {
    cfg.validate()?;
    if x.len() != cfg.dim || targets.iter().any(|y| y.len() != cfg.dim) {
        return Err(Error::InvalidParameter("site dimension differs from the config".into()));
    }
    let inner = targets.iter().map(|y| sup(y)).chain([sup(x), cfg.probe_radius]).max().unwrap_or(0);
    let t_max = cfg.t_max();
    let geom = cfg.geometry(inner, t_max)?;
    let xi = geom.index(x)?;
    let ys: Vec<usize> = targets.iter().map(|y| geom.index(y)).collect::<Result<_>>()?;
    let ev = guarded(
        cfg,
        EvolveConfig::new(cfg.t_grid.clone()).until(t_max).track_discrepancy(),
        LightConeTarget::Discrepancy,
    );
    run_replicas(cfg.replicas, |i| {
        let (eta, _) = mu_sample(cfg, &geom, cfg.seed_for(experiment, i, &[0]))?;
        let flipped = eta.flip(xi)?;
        let stream = cfg.stream(cfg.seed_for(experiment, i, &[1]), &geom, t_max)?;
        let trajs = evolve_coupled(&[eta, flipped], &stream, &ev)?;
        let disagree = trajs[0]
            .snapshots
            .iter()
            .zip(&trajs[1].snapshots)
            .map(|(a, b)| ys.iter().map(|&y| a.is_infected(y) != b.is_infected(y)).collect())
            .collect();
        let delta = trajs[1].discrepancy.clone().unwrap_or_default();
        Ok(FlipRun { disagree, delta })
    })
}

/// Result of [`discrepancy_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub x: Vec<i64>,
    pub targets: Vec<Vec<i64>>,
    /// `P(ξ^η_t(y) ≠ ξ^{η^x}_t(y))` against `t`, one series per target.
    pub series: Vec<EstimateSeries>,
    /// Exponential fit of the `y = x` series over `t ≥ t_min`.
    pub temporal_fit: Option<FitResult>,
    /// The same probabilities at the last grid time against `‖y − x‖∞`.
    pub spatial: EstimateSeries,
}

/// Result of [`cluster_second_moment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// `E|ξ^η_t Δ ξ^{η^x}_t|²` against `t`.
    pub second_moment: EstimateSeries,
    /// `E|ξ^η_t Δ ξ^{η^x}_t|` against `t`.
    pub mean: EstimateSeries,
    pub fit: Option<FitResult>,
}

fn discrepancy_report(cfg: &MCConfig, x: &[i64], targets: &[Vec<i64>], runs: &[FlipRun]) -> DiscrepancyReport {
    let n = runs.len();
    let mut series = Vec::new();
    for (j, y) in targets.iter().enumerate() {
        let mut s = EstimateSeries::new(format!("{y:?}"));
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let hits = runs.iter().filter(|r| r.disagree[k][j]).count();
            s.push(bernoulli(t, hits, n));
        }
        series.push(s);
    }
    let temporal_fit = targets
        .iter()
        .position(|y| y.as_slice() == x)
        .and_then(|j| fit_exponential(&series[j], cfg.t_min).ok());
    let last = cfg.t_grid.len() - 1;
    let mut spatial = EstimateSeries::new("spatial_at_t_max");
    for (j, y) in targets.iter().enumerate() {
        let dist = y.iter().zip(x).map(|(a, b)| (a - b).unsigned_abs()).max().unwrap_or(0);
        let mut e = series[j].points[last];
        e.x = dist as f64;
        spatial.push(e);
    }
    DiscrepancyReport {
        x: x.to_vec(),
        targets: targets.to_vec(),
        series,
        temporal_fit,
        spatial,
    }
}

fn cluster_report(cfg: &MCConfig, runs: &[FlipRun]) -> ClusterReport {
    let mut second_moment = EstimateSeries::new("delta_sq");
    let mut mean = EstimateSeries::new("delta");
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let d: Vec<f64> = runs.iter().map(|r| r.delta[k] as f64).collect();
        let d2: Vec<f64> = d.iter().map(|v| v * v).collect();
        second_moment.push(mean_estimate(t, &d2));
        mean.push(mean_estimate(t, &d));
    }
    ClusterReport {
        fit: fit_exponential(&second_moment, cfg.t_min).ok(),
        second_moment,
        mean,
    }
}

/// Probability that flipping `x` in a μ-sample still shows at `y` after time
/// `t`, for each target `y` and grid time `t`.
pub fn discrepancy_decay(cfg: &MCConfig, x: &[i64], targets: &[Vec<i64>]) -> Result<DiscrepancyReport> {
    let runs = flip_runs(cfg, x, targets, "discrepancy")?;
    Ok(discrepancy_report(cfg, x, targets, &runs))
}

/// Second moment of the discrepancy set created by flipping the origin.
pub fn cluster_second_moment(cfg: &MCConfig) -> Result<ClusterReport> {
    let origin = vec![0; cfg.dim];
    let runs = flip_runs(cfg, &origin, &[], "cluster")?;
    Ok(cluster_report(cfg, &runs))
}

/// Both reports from a single set of coupled runs.
pub fn discrepancy_and_cluster(
    cfg: &MCConfig,
    x: &[i64],
    targets: &[Vec<i64>],
) -> Result<(DiscrepancyReport, ClusterReport)> {
    let runs = flip_runs(cfg, x, targets, "discrepancy")?;
    Ok((discrepancy_report(cfg, x, targets, &runs), cluster_report(cfg, &runs)))
}
