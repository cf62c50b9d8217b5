use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{Domain, MCConfig};
use super::runner::{mu_sample, run_replicas};
use crate::error::{Error, Result};
use crate::exact::{build_generator, marginal, stationary, Flavor, STATE_CAP};
use crate::lattice::{Boundary, Configuration, Geometry};

/// Most cells `2^{|Λ_L|}` a marginal may have.
pub const TV_CELL_CAP: usize = 256;

/// A distribution over the `2^{|Λ_L|}` configurations of the probe window,
/// either exact or an empirical histogram over `n` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub probabilities: Vec<f64>,
    /// Number of samples behind an empirical histogram; `None` when exact.
    pub samples: Option<usize>,
}

impl Marginal {
    pub fn exact(probabilities: Vec<f64>) -> Self {
        Marginal { probabilities, samples: None }
    }

    /// Histogram of configurations restricted to `probe`.
    pub fn empirical(probe: &Arc<Geometry>, configs: &[Configuration]) -> Result<Self> {
        let mut counts = vec![0usize; 1 << probe.site_count()];
        for c in configs {
            counts[c.restrict_to(probe)?.to_mask()? as usize] += 1;
        }
        let n = configs.len().max(1) as f64;
        Ok(Marginal {
            probabilities: counts.iter().map(|&k| k as f64 / n).collect(),
            samples: Some(configs.len()),
        })
    }
}

/// `½ Σ |p − q|` with a delta-method standard error. For each empirical
/// side the functional has gradient `s_c = ½ sign(p_c − q_c)`, so its
/// variance is `(Σ s_c² p_c − (Σ s_c p_c)²) / n`.
pub fn tv_distance(p: &Marginal, q: &Marginal) -> Result<(f64, f64)> {
    if p.probabilities.len() != q.probabilities.len() {
        return Err(Error::GeometryMismatch("marginals over different windows".into()));
    }
    let s: Vec<f64> = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| 0.5 * (a - b).signum() * ((a - b).abs() > 0.0) as u8 as f64)
        .collect();
    let tv = 0.5 * p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let var = |m: &Marginal| match m.samples {
        None => 0.0,
        Some(n) => {
            let m1: f64 = s.iter().zip(&m.probabilities).map(|(s, p)| s * p).sum();
            let m2: f64 = s.iter().zip(&m.probabilities).map(|(s, p)| s * s * p).sum();
            (m2 - m1 * m1).max(0.0) / n as f64
        }
    };
    Ok((tv, (var(p) + var(q)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub n: usize,
    pub tv: f64,
    pub se: f64,
    /// Whether `μ_N|Λ_L` came from the exact stationary vector.
    pub exact: bool,
}

/// Result of [`tv_marginal_distance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    pub probe_radius: usize,
    pub burn_in: f64,
    pub points: Vec<TvPoint>,
}

impl TvReport {
    /// Whether each distance is at most the previous one plus `k` combined
    /// standard errors.
    pub fn non_increasing(&self, k: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].tv <= w[0].tv + k * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt())
    }
}

/// `μ_N` restricted to `Λ_L`: exact when the chain fits the state cap, else
/// the histogram of runs from all-infected in `Λ_N` with an infected
/// exterior, burnt in for the config's `T_b`.
pub fn finite_marginal(cfg: &MCConfig, probe: &Arc<Geometry>, n: usize) -> Result<Marginal> {
    let sites = (2 * n + 1).pow(cfg.dim as u32);
    if sites < 63 && (1usize << sites) <= STATE_CAP {
        let q = build_generator(cfg.dim, n, cfg.lambda, Flavor::InfectedBoundary)?;
        let mu = stationary(&q)?;
        return Ok(Marginal::exact(marginal(q.space(), &mu.probabilities, probe)?));
    }
    let window = cfg.clone().with_domain(Domain::Window {
        radius: n,
        boundary: Boundary::InfectedExterior,
    });
    let geom = window.geometry(probe.radius(), 0.0)?;
    let samples = run_replicas(cfg.replicas, |i| {
        Ok(mu_sample(&window, &geom, window.seed_for("tv-finite", i, &[n as u64]))?.0)
    })?;
    Marginal::empirical(probe, &samples)
}

/// Total-variation distance between `μ_N|Λ_L` and `μ|Λ_L` for each `N` in
/// `n_grid`. The reference `μ|Λ_L` is sampled once on the lattice and shared
/// by every `N`.
pub fn tv_marginal_distance(cfg: &MCConfig, l: usize, n_grid: &[usize]) -> Result<TvReport> {
    cfg.validate()?;
    let cells = (2 * l + 1).pow(cfg.dim as u32);
    if cells >= 63 || (1usize << cells) > TV_CELL_CAP {
        return Err(Error::StateCap {
            states: 1 << cells.min(62),
            cap: TV_CELL_CAP,
        });
    }
    if n_grid.iter().any(|&n| n < l) {
        return Err(Error::InvalidParameter("every N must be at least L".into()));
    }
    let probe = Arc::new(Geometry::new(cfg.dim, l, Boundary::Free)?);
    let lattice = cfg.clone().with_domain(Domain::Lattice);
    let reference = run_replicas(cfg.replicas, |i| {
        Ok(mu_sample(&lattice, &probe, lattice.seed_for("tv-lattice", i, &[]))?.0)
    })?;
    let reference = Marginal::empirical(&probe, &reference)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let m = finite_marginal(cfg, &probe, n)?;
        let (tv, se) = tv_distance(&m, &reference)?;
        points.push(TvPoint {
            n,
            tv,
            se,
            exact: m.samples.is_none(),
        });
    }
    Ok(TvReport {
        probe_radius: l,
        burn_in: cfg.burn_in(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_bounds_and_se() {
        let p = Marginal::exact(vec![0.5, 0.5]);
        let q = Marginal::exact(vec![1.0, 0.0]);
        assert_eq!(tv_distance(&p, &q).unwrap(), (0.5, 0.0));
        assert_eq!(tv_distance(&p, &p).unwrap(), (0.0, 0.0));
        // one empirical side: TV = |p̂_0 − 1|, se of a proportion
        let e = Marginal { probabilities: vec![0.75, 0.25], samples: Some(100) };
        let (tv, se) = tv_distance(&e, &q).unwrap();
        assert!((tv - 0.25).abs() < 1e-15);
        assert!((se - (0.75f64 * 0.25 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn window_equal_to_probe_is_in_unit_interval() {
        let cfg = MCConfig::new(1, 2.0, 200, 3, vec![1.0]);
        let r = tv_marginal_distance(&cfg, 1, &[1]).unwrap();
        assert!(r.points[0].exact);
        assert!((0.0..=1.0).contains(&r.points[0].tv));
    }

    #[test]
    fn oversized_probe_rejected() {
        let cfg = MCConfig::new(2, 2.0, 100, 3, vec![1.0]);
        assert!(matches!(tv_marginal_distance(&cfg, 1, &[1]), Err(Error::StateCap { .. })));
    }
}
