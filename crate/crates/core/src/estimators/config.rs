use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphical::{default_kappa, light_cone_radius, make_stream, EventStream};
use crate::lattice::{Boundary, Geometry, ModelParams};
use crate::seeds;

/// Where the dynamics run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    /// Emulate `Z^d`: every run gets a free-boundary box sized by the light
    /// cone of its observation window, and sparse runs abort if the infection
    /// reaches the outer shell.
    Lattice,
    /// A fixed finite window. Used to compare estimators with the exact
    /// finite-volume chain; under `InfectedExterior` the invariant measure is
    /// `μ_N` of that window.
    Window { radius: usize, boundary: Boundary },
}

/// Shell width watched by the light-cone guard.
pub const GUARD_SHELL: usize = 2;

/// Monte Carlo configuration shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCConfig {
    pub dim: usize,
    pub lambda: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Observation times, sorted and non-negative.
    pub t_grid: Vec<f64>,
    /// Burn-in `T_b` for μ-samples; defaults to `3 · max(t_grid)`.
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Radius `L` of the probe window.
    #[serde(default)]
    pub probe_radius: usize,
    /// Light-cone speed; defaults to `2(1 + 2dλ)`.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Survival-proxy horizon; defaults to `max(t_grid) + 10`.
    #[serde(default)]
    pub survival_horizon: Option<f64>,
    /// Temporal fits ignore points with `t < t_min`.
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_domain")]
    pub domain: Domain,
}

fn default_t_min() -> f64 {
    1.0
}

fn default_domain() -> Domain {
    Domain::Lattice
}

/// Fewest replicas an experiment accepts.
pub const MIN_REPLICAS: usize = 100;

impl MCConfig {
    pub fn new(dim: usize, lambda: f64, replicas: usize, seed: u64, t_grid: Vec<f64>) -> Self {
        MCConfig {
            dim,
            lambda,
            replicas,
            seed,
            t_grid,
            burn_in: None,
            probe_radius: 0,
            kappa: None,
            survival_horizon: None,
            t_min: default_t_min(),
            domain: Domain::Lattice,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_burn_in(mut self, t: f64) -> Self {
        self.burn_in = Some(t);
        self
    }

    pub fn with_probe_radius(mut self, l: usize) -> Self {
        self.probe_radius = l;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_survival_horizon(mut self, t: f64) -> Self {
        self.survival_horizon = Some(t);
        self
    }

    pub fn with_t_min(mut self, t: f64) -> Self {
        self.t_min = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.lambda)?;
        if self.dim == 0 || self.dim > crate::lattice::MAX_DIM {
            return Err(Error::InvalidParameter(format!("dimension {} out of range", self.dim)));
        }
        if self.replicas < MIN_REPLICAS {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_REPLICAS} replicas required, got {}",
                self.replicas
            )));
        }
        if self.t_grid.is_empty() {
            return Err(Error::InvalidParameter("empty time grid".into()));
        }
        let mut last = 0.0;
        for &t in &self.t_grid {
            if !(t.is_finite() && t >= last) {
                return Err(Error::InvalidParameter("time grid must be finite, non-negative and sorted".into()));
            }
            last = t;
        }
        if let Some(b) = self.burn_in {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("burn-in must be positive, got {b}")));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("kappa must be positive, got {k}")));
            }
        }
        if let Some(h) = self.survival_horizon {
            if !(h >= self.t_max() && h.is_finite()) {
                return Err(Error::InvalidParameter("survival horizon must cover the time grid".into()));
            }
        }
        if let Domain::Window { radius, .. } = self.domain {
            if self.probe_radius > radius {
                return Err(Error::InvalidParameter("probe window exceeds the simulation window".into()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { lambda: self.lambda }
    }

    pub fn t_max(&self) -> f64 {
        self.t_grid.last().copied().unwrap_or(0.0)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or_else(|| default_kappa(self.dim, self.lambda))
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(3.0 * self.t_max()).max(f64::MIN_POSITIVE)
    }

    pub fn survival_horizon(&self) -> f64 {
        self.survival_horizon.unwrap_or(self.t_max() + 10.0)
    }

    /// Window in which a run observed on radius `inner` up to time `t`
    /// evolves.
    pub fn geometry(&self, inner: usize, t: f64) -> Result<Arc<Geometry>> {
        let g = match self.domain {
            Domain::Lattice => Geometry::new(self.dim, light_cone_radius(inner, t, self.kappa()), Boundary::Free)?,
            Domain::Window { radius, boundary } => {
                if inner > radius {
                    return Err(Error::GeometryMismatch(format!(
                        "observation radius {inner} exceeds the window radius {radius}"
                    )));
                }
                Geometry::new(self.dim, radius, boundary)?
            }
        };
        Ok(Arc::new(g))
    }

    /// Whether sparse runs should carry the light-cone guard.
    pub fn guarded(&self) -> bool {
        matches!(self.domain, Domain::Lattice)
    }

    /// Seed of replica `i` of `experiment`, further split by `labels`.
    pub fn seed_for(&self, experiment: &str, i: usize, labels: &[u64]) -> u64 {
        seeds::derive_seed(seeds::replica_seed(self.seed, experiment, i as u64), labels)
    }

    pub fn stream(&self, seed: u64, geom: &Arc<Geometry>, horizon: f64) -> Result<EventStream> {
        make_stream(seed, geom, self.params(), horizon.max(f64::MIN_POSITIVE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_time_grid() {
        let c = MCConfig::new(1, 2.0, 100, 1, vec![0.0, 1.0, 8.0]);
        assert_eq!(c.burn_in(), 24.0);
        assert_eq!(c.survival_horizon(), 18.0);
        assert_eq!(c.kappa(), 10.0);
        assert_eq!(c.geometry(3, 1.0).unwrap().radius(), 3 + 10 + 4);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = MCConfig::new(1, 2.0, 100, 1, vec![0.0, 1.0]);
        assert!(MCConfig { replicas: 10, ..base.clone() }.validate().is_err());
        assert!(MCConfig { t_grid: vec![1.0, 0.5], ..base.clone() }.validate().is_err());
        assert!(MCConfig { lambda: -1.0, ..base.clone() }.validate().is_err());
        assert!(base.clone().with_burn_in(0.0).validate().is_err());
        let w = base.with_domain(Domain::Window { radius: 1, boundary: Boundary::Free }).with_probe_radius(2);
        assert!(w.validate().is_err());
    }

    #[test]
    fn toml_roundtrip_shape() {
        let c = MCConfig::new(1, 2.0, 100, 7, vec![1.0]).with_domain(Domain::Window {
            radius: 2,
            boundary: Boundary::InfectedExterior,
        });
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["domain"]["kind"], "window");
        assert_eq!(v["domain"]["boundary"], "infected-exterior");
        let back: MCConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
