use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MCConfig, GUARD_SHELL};
use super::series::{mean_estimate, EstimateSeries};
use crate::error::Result;
use crate::graphical::{evolve, EvolveConfig, LightConeTarget};
use crate::lattice::{Configuration, Geometry};

/// Run `n` replicas, possibly in parallel, returning results in replica
/// order. The first failing replica in index order is reported, so the
/// outcome never depends on scheduling.
pub fn run_replicas<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        out.push(r.map_err(|e| e.in_replica(i))?);
    }
    Ok(out)
}

/// Evolve-config with the light-cone guard attached when the domain calls
/// for it.
pub(crate) fn guarded(cfg: &MCConfig, ev: EvolveConfig, target: LightConeTarget) -> EvolveConfig {
    if cfg.guarded() {
        ev.light_cone(GUARD_SHELL, target)
    } else {
        ev
    }
}

/// One approximate sample of the upper invariant measure on `target`: the
/// all-infected configuration run for `T_b` and restricted to `target`.
///
/// On the lattice the run happens in a box wide enough that the missing
/// infection beyond its free edge cannot reach `target` within `T_b` at
/// speed `κ`. In a fixed window the run happens in the window itself, so
/// under an infected exterior the sample approximates `μ_N`.
///
/// Also returns the infected count of the probe window `Λ_L` at
/// `T_b · k/4`, `k = 1..4`.
pub(crate) fn mu_sample(cfg: &MCConfig, target: &Arc<Geometry>, seed: u64) -> Result<(Configuration, [usize; 4])> {
    let tb = cfg.burn_in();
    let geom = match cfg.domain {
        super::Domain::Lattice => cfg.geometry(target.radius(), tb)?,
        super::Domain::Window { .. } => Arc::clone(target),
    };
    let stream = cfg.stream(seed, &geom, tb)?;
    let probes = vec![0.25 * tb, 0.5 * tb, 0.75 * tb, tb];
    let traj = evolve(&Configuration::full(&geom), &stream, &EvolveConfig::new(probes).until(tb))?;
    let l = cfg.probe_radius;
    let mut counts = [0usize; 4];
    for (c, snap) in counts.iter_mut().zip(&traj.snapshots) {
        *c = snap.sites().filter(|&x| geom.sup_norm(x) <= l).count();
    }
    let sample = if Arc::ptr_eq(&geom, target) {
        traj.snapshots[3].clone()
    } else {
        traj.snapshots[3].restrict_to(target)?
    };
    Ok((sample, counts))
}

/// Output of [`sample_mu`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSamples {
    pub burn_in: f64,
    /// Density of the probe window `Λ_L` at `T_b · k/4`; it should have
    /// stabilised by the last point.
    pub density: EstimateSeries,
    #[serde(skip)]
    pub samples: Vec<Configuration>,
}

/// Approximate samples of the upper invariant measure restricted to the
/// window of radius `radius` (one per replica). The bias is one-sided: the
/// samples stochastically dominate the invariant measure and decrease in
/// `T_b`.
pub fn sample_mu(cfg: &MCConfig, radius: usize) -> Result<MuSamples> {
    cfg.validate()?;
    let target = match cfg.domain {
        super::Domain::Lattice => Arc::new(Geometry::new(cfg.dim, radius, crate::lattice::Boundary::Free)?),
        super::Domain::Window { .. } => cfg.geometry(radius, 0.0)?,
    };
    let runs = run_replicas(cfg.replicas, |i| mu_sample(cfg, &target, cfg.seed_for("sample_mu", i, &[])))?;
    let cells = probe_cells(cfg);
    let tb = cfg.burn_in();
    let mut density = EstimateSeries::new("density");
    for k in 0..4 {
        let v: Vec<f64> = runs.iter().map(|r| r.1[k] as f64 / cells as f64).collect();
        density.push(mean_estimate(tb * (k + 1) as f64 / 4.0, &v));
    }
    Ok(MuSamples {
        burn_in: tb,
        density,
        samples: runs.into_iter().map(|r| r.0).collect(),
    })
}

pub(crate) fn probe_cells(cfg: &MCConfig) -> usize {
    (2 * cfg.probe_radius + 1).pow(cfg.dim as u32)
}
