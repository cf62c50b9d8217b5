use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::MCConfig;
use super::fit::{fit_exponential, FitResult};
use super::runner::{mu_sample, run_replicas};
use super::series::{centred_second_moment, EstimateSeries};
use crate::error::Result;
use crate::exact::{build_generator, spectral_gap, spectrum, Flavor, DENSE_CAP};
use crate::graphical::{evolve, EvolveConfig};
use crate::lattice::LocalFunction;

/// Exact spectral gap of a small window, reported next to the fitted rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReference {
    pub dim: usize,
    pub radius: usize,
    pub gap: f64,
    /// `−2 · gap`, the variance decay rate implied by the gap.
    pub variance_rate: f64,
}

/// Result of [`variance_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// Estimates of `Var_μ(P_t f)` against `t`.
    pub series: EstimateSeries,
    /// Times whose estimate is negative beyond three standard errors (the
    /// noise floor); such points never enter the fit.
    pub flagged: Vec<f64>,
    pub fit: Option<FitResult>,
    pub reference: Option<GapReference>,
}

/// Exact gap of the infected-boundary chain on the smallest window of radius
/// at least 1 that holds the support of `f` and fits the dense cap.
pub fn gap_reference(dim: usize, lambda: f64, support_radius: usize) -> Option<GapReference> {
    let radius = support_radius.max(if dim == 1 { 2 } else { 1 });
    let sites = (2 * radius + 1).pow(dim as u32);
    if sites >= 63 || (1usize << sites) > DENSE_CAP {
        return None;
    }
    let q = build_generator(dim, radius, lambda, Flavor::InfectedBoundary).ok()?;
    let gap = spectral_gap(&spectrum(&q).ok()?);
    Some(GapReference {
        dim,
        radius,
        gap,
        variance_rate: -2.0 * gap,
    })
}

/// `Var_μ(P_t f) = ∫|P_t f|² dμ − |∫f dμ|²` by the two-replica identity:
/// from one μ-sample `η`, two copies `X`, `Y` evolve under independent
/// streams, so `E[f(X_t) conj f(Y_t) | η] = |P_t f(η)|²`.
pub fn variance_decay(cfg: &MCConfig, f: &LocalFunction) -> Result<VarianceReport> {
    cfg.validate()?;
    let support = f
        .support()
        .iter()
        .flat_map(|p| p.iter())
        .map(|c| c.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let inner = support.max(cfg.probe_radius);
    let t_max = cfg.t_max();
    let geom = cfg.geometry(inner, t_max)?;
    let bound = f.bind(&geom);
    let ev = EvolveConfig::new(cfg.t_grid.clone()).until(t_max);
    let runs = run_replicas(cfg.replicas, |i| {
        let (eta, _) = mu_sample(cfg, &geom, cfg.seed_for("variance", i, &[0]))?;
        let mut vals = Vec::with_capacity(2);
        for copy in 1..=2u64 {
            let stream = cfg.stream(cfg.seed_for("variance", i, &[copy]), &geom, t_max)?;
            let traj = evolve(&eta, &stream, &ev)?;
            vals.push(traj.snapshots.iter().map(|s| f.eval_bound(&bound, s)).collect::<Vec<Complex64>>());
        }
        Ok(vals)
    })?;
    let mut series = EstimateSeries::new("variance");
    let mut flagged = Vec::new();
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let z: Vec<f64> = runs.iter().map(|r| (r[0][k] * r[1][k].conj()).re).collect();
        let g: Vec<Complex64> = runs.iter().map(|r| (r[0][k] + r[1][k]) * 0.5).collect();
        let e = centred_second_moment(t, &z, &g);
        if e.estimate < -3.0 * e.se {
            flagged.push(t);
        }
        series.push(e);
    }
    Ok(VarianceReport {
        fit: fit_exponential(&series, cfg.t_min).ok(),
        reference: gap_reference(cfg.dim, cfg.lambda, support),
        series,
        flagged,
    })
}
