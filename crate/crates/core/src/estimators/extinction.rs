use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::MCConfig;
use super::fit::{fit_exponential, FitResult};
use super::runner::{guarded, run_replicas};
use super::series::{bernoulli, EstimateSeries};
use crate::error::{Error, Result};
use crate::graphical::{evolve, EvolveConfig, LightConeTarget, Trajectory};
use crate::lattice::{Configuration, Geometry};

/// Centred box of side `side`: `{-⌊(side−1)/2⌋ .. ⌈(side−1)/2⌉}^d`.
pub fn centred_box(dim: usize, side: usize) -> Vec<Vec<i64>> {
    let lo = -(((side as i64) - 1) / 2);
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (0..side as i64).map(move |k| {
                    let mut q = p.clone();
                    q.push(lo + k);
                    q
                })
            })
            .collect();
    }
    out
}

fn points_radius(points: &[Vec<i64>]) -> usize {
    points
        .iter()
        .flat_map(|p| p.iter())
        .map(|c| c.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

/// Run the process from the points `a` up to `until`, recording the state at
/// the probe times. Lattice runs carry the light-cone guard.
pub(crate) fn run_from(
    cfg: &MCConfig,
    experiment: &str,
    replica: usize,
    labels: &[u64],
    a: &[Vec<i64>],
    geom: &Arc<Geometry>,
    probes: Vec<f64>,
    until: f64,
) -> Result<Trajectory> {
    let start = Configuration::from_coords(geom, a.iter().map(|p| p.as_slice()))?;
    let stream = cfg.stream(cfg.seed_for(experiment, replica, labels), geom, until)?;
    let ev = guarded(cfg, EvolveConfig::new(probes).until(until), LightConeTarget::AllCopies);
    evolve(&start, &stream, &ev)
}

/// `P(ξ^A_t ≠ ∅)` for every `t` in the time grid.
pub fn survival_probability(cfg: &MCConfig, a: &[Vec<i64>]) -> Result<EstimateSeries> {
    cfg.validate()?;
    let t_max = cfg.t_max();
    let geom = cfg.geometry(points_radius(a), t_max)?;
    let alive = run_replicas(cfg.replicas, |i| {
        let traj = run_from(cfg, "survival", i, &[], a, &geom, cfg.t_grid.clone(), t_max)?;
        Ok(traj.snapshots.iter().map(|s| !s.is_empty()).collect::<Vec<bool>>())
    })?;
    let mut series = EstimateSeries::new("survival");
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let hits = alive.iter().filter(|v| v[k]).count();
        series.push(bernoulli(t, hits, cfg.replicas));
    }
    Ok(series)
}

/// Result of [`extinction_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionProfile {
    /// Survival-proxy horizon `T`.
    pub horizon: f64,
    /// `P(τ ≤ T)` against `|A|` for centred boxes.
    pub by_size: EstimateSeries,
    /// `P(t < τ ≤ T)` against `t` for a single initial infection.
    pub by_time: EstimateSeries,
    pub size_fit: Option<FitResult>,
    pub time_fit: Option<FitResult>,
}

/// Extinction probabilities by initial size and late-extinction
/// probabilities by time. Each box side in `sides` runs on its own
/// independent streams.
pub fn extinction_profile(cfg: &MCConfig, sides: &[usize]) -> Result<ExtinctionProfile> {
    cfg.validate()?;
    if sides.is_empty() || sides.contains(&0) {
        return Err(Error::InvalidParameter("box sides must be positive".into()));
    }
    let horizon = cfg.survival_horizon();
    let mut by_size = EstimateSeries::new("extinct_by_horizon");
    let mut by_time = EstimateSeries::new("late_extinction");
    for (j, &side) in sides.iter().enumerate() {
        let a = centred_box(cfg.dim, side);
        let geom = cfg.geometry(points_radius(&a), horizon)?;
        let taus = run_replicas(cfg.replicas, |i| {
            let traj = run_from(cfg, "extinction", i, &[j as u64], &a, &geom, vec![], horizon)?;
            Ok(traj.extinction_time)
        })?;
        let extinct = taus.iter().filter(|t| t.is_some()).count();
        by_size.push(bernoulli(a.len() as f64, extinct, cfg.replicas));
        if j == 0 {
            for &t in &cfg.t_grid {
                let late = taus.iter().filter(|tau| matches!(tau, Some(s) if *s > t)).count();
                by_time.push(bernoulli(t, late, cfg.replicas));
            }
        }
    }
    Ok(ExtinctionProfile {
        horizon,
        size_fit: fit_exponential(&by_size, 0.0).ok(),
        time_fit: fit_exponential(&by_time, cfg.t_min).ok(),
        by_size,
        by_time,
    })
}

/// `P(ξ^A_t = ∅)` at each grid time, for oracle comparison in a fixed window.
pub fn extinction_by_time(cfg: &MCConfig, a: &[Vec<i64>]) -> Result<EstimateSeries> {
    let s = survival_probability(cfg, a)?;
    Ok(EstimateSeries {
        label: "extinct".into(),
        points: s
            .points
            .into_iter()
            .map(|mut p| {
                p.estimate = 1.0 - p.estimate;
                p
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes() {
        assert_eq!(centred_box(1, 3), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(centred_box(1, 2), vec![vec![0], vec![1]]);
        assert_eq!(centred_box(2, 2).len(), 4);
        assert_eq!(centred_box(1, 1), vec![vec![0]]);
    }

    #[test]
    fn pure_death_always_dies() {
        let cfg = MCConfig::new(1, 0.0, 200, 3, vec![0.5, 1.0]).with_survival_horizon(30.0);
        let p = extinction_profile(&cfg, &[1, 2, 4]).unwrap();
        assert!(p.by_size.points.iter().all(|e| e.estimate == 1.0));
        assert_eq!(p.by_size.points[2].x, 4.0);
    }

    #[test]
    fn same_seed_same_series() {
        let cfg = MCConfig::new(1, 2.0, 200, 9, vec![0.5, 1.0, 2.0]);
        let a = survival_probability(&cfg, &[vec![0]]).unwrap();
        let b = survival_probability(&cfg, &[vec![0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points[0].n, 200);
    }
}
