use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::MCConfig;
use super::runner::{guarded, run_replicas};
use super::series::{bernoulli, Estimate};
use crate::error::{Error, Result};
use crate::exact::{build_generator, semigroup_apply, Flavor, STATE_CAP};
use crate::graphical::{dual_reverse, evolve, EvolveConfig, LightConeTarget};
use crate::lattice::{Boundary, Configuration, Geometry};

fn radius_of(points: &[Vec<i64>]) -> usize {
    points
        .iter()
        .flat_map(|p| p.iter())
        .map(|c| c.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

/// Result of [`duality_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub t: f64,
    /// `P(ξ^A_t ∩ B ≠ ∅)`.
    pub forward: Estimate,
    /// `P(ξ^B_t ∩ A ≠ ∅)` on independent streams.
    pub dual: Estimate,
    /// Replicas where the forward hit and the dual hit on the reversed copy
    /// of the same stream disagree; zero by construction of the dual.
    pub pathwise_mismatches: usize,
}

impl DualityReport {
    pub fn agree(&self, k: f64) -> bool {
        let se = (self.forward.se.powi(2) + self.dual.se.powi(2)).sqrt();
        (self.forward.estimate - self.dual.estimate).abs() <= k * se
    }
}

/// Self-duality `P(ξ^A_t ∩ B ≠ ∅) = P(ξ^B_t ∩ A ≠ ∅)`, estimated on
/// independent streams, plus the pathwise identity on every forward stream.
pub fn duality_check(cfg: &MCConfig, a: &[Vec<i64>], b: &[Vec<i64>], t: f64) -> Result<DualityReport> {
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    let geom = cfg.geometry(radius_of(a).max(radius_of(b)), t)?;
    let ca = Configuration::from_coords(&geom, a.iter().map(|p| p.as_slice()))?;
    let cb = Configuration::from_coords(&geom, b.iter().map(|p| p.as_slice()))?;
    let ev = guarded(cfg, EvolveConfig::new(vec![t]).until(t), LightConeTarget::AllCopies);
    let runs = run_replicas(cfg.replicas, |i| {
        let s1 = cfg.stream(cfg.seed_for("duality", i, &[0]), &geom, t)?;
        let fwd = evolve(&ca, &s1, &ev)?.snapshots[0].intersects(&cb)?;
        let rev = dual_reverse(&s1, t)?;
        let path = evolve(&cb, &rev, &ev)?.snapshots[0].intersects(&ca)?;
        let s2 = cfg.stream(cfg.seed_for("duality", i, &[1]), &geom, t)?;
        let dual = evolve(&cb, &s2, &ev)?.snapshots[0].intersects(&ca)?;
        Ok((fwd, path, dual))
    })?;
    let n = runs.len();
    Ok(DualityReport {
        t,
        forward: bernoulli(t, runs.iter().filter(|r| r.0).count(), n),
        dual: bernoulli(t, runs.iter().filter(|r| r.2).count(), n),
        pathwise_mismatches: runs.iter().filter(|r| r.0 != r.1).count(),
    })
}

/// Result of [`finite_duality_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDualityReport {
    pub radius: usize,
    pub t: f64,
    /// `P(ξ^η_{N,t} ∩ A ≠ ∅)` in `Λ_N` with every outside site infected.
    pub lhs: Estimate,
    /// `P(ξ^A_t ∩ η ≠ ∅ or σ_N ≤ t)` on the free window `Λ_{N+1}`, where `σ_N`
    /// is the first time `ξ^A` leaves `Λ_N`.
    pub rhs: Estimate,
    /// Exact values of both sides when the windows fit the state cap.
    pub exact_lhs: Option<f64>,
    pub exact_rhs: Option<f64>,
}

impl FiniteDualityReport {
    pub fn agree(&self, k: f64) -> bool {
        let se = (self.lhs.se.powi(2) + self.rhs.se.powi(2)).sqrt();
        (self.lhs.estimate - self.rhs.estimate).abs() <= k * se
    }
}

fn mask_of(geom: &Arc<Geometry>, points: &[Vec<i64>]) -> Result<u64> {
    Configuration::from_coords(geom, points.iter().map(|p| p.as_slice()))?.to_mask()
}

/// Exact values of both sides of the finite duality.
pub fn finite_duality_exact(
    dim: usize,
    lambda: f64,
    eta: &[Vec<i64>],
    a: &[Vec<i64>],
    n: usize,
    t: f64,
) -> Result<(f64, f64)> {
    let q = build_generator(dim, n, lambda, Flavor::InfectedBoundary)?;
    let inner = q.space().geometry().clone();
    let a_in = mask_of(&inner, a)?;
    let eta_in = mask_of(&inner, eta)?;
    let f: Vec<f64> = (0..q.size() as u64).map(|s| (s & a_in != 0) as u8 as f64).collect();
    let lhs = semigroup_apply(&q, &f, t)?[eta_in as usize];

    let outer = Arc::new(Geometry::new(dim, n + 1, Boundary::Free)?);
    let shell = outer.shell(1).iter().fold(0u64, |m, &x| m | 1 << x);
    let q2 = build_generator(dim, n + 1, lambda, Flavor::StoppedOnGuard(shell))?;
    let eta_out = mask_of(&outer, eta)?;
    let a_out = mask_of(&outer, a)?;
    let g: Vec<f64> = (0..q2.size() as u64)
        .map(|s| (s & shell != 0 || s & eta_out != 0) as u8 as f64)
        .collect();
    let rhs = semigroup_apply(&q2, &g, t)?[a_out as usize];
    Ok((lhs, rhs))
}

/// Finite-volume duality between the process in `Λ_N` with an infected
/// exterior and the process from `A` stopped on leaving `Λ_N`. Both windows
/// are fixed by `N`, so the config's domain is not used.
pub fn finite_duality_check(
    cfg: &MCConfig,
    eta: &[Vec<i64>],
    a: &[Vec<i64>],
    n: usize,
    t: f64,
) -> Result<FiniteDualityReport> {
    cfg.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let inner = Arc::new(Geometry::new(cfg.dim, n, Boundary::InfectedExterior)?);
    let outer = Arc::new(Geometry::new(cfg.dim, n + 1, Boundary::Free)?);
    if radius_of(eta) > n || radius_of(a) > n {
        return Err(Error::GeometryMismatch(format!("η and A must lie in the window of radius {n}")));
    }
    let eta_in = Configuration::from_coords(&inner, eta.iter().map(|p| p.as_slice()))?;
    let a_in = Configuration::from_coords(&inner, a.iter().map(|p| p.as_slice()))?;
    let eta_out = Configuration::from_coords(&outer, eta.iter().map(|p| p.as_slice()))?;
    let a_out = Configuration::from_coords(&outer, a.iter().map(|p| p.as_slice()))?;
    let shell = outer.shell(1);
    let horizon = t.max(f64::MIN_POSITIVE);
    let runs = run_replicas(cfg.replicas, |i| {
        let s1 = cfg.stream(cfg.seed_for("finite-duality", i, &[0]), &inner, horizon)?;
        let l = evolve(&eta_in, &s1, &EvolveConfig::new(vec![t]).until(t))?;
        let lhs = l.snapshots[0].intersects(&a_in)?;
        let s2 = cfg.stream(cfg.seed_for("finite-duality", i, &[1]), &outer, horizon)?;
        let ev = EvolveConfig::new(vec![t]).until(t).guard(shell.clone()).stop_at_guard();
        let r = evolve(&a_out, &s2, &ev)?;
        let rhs = r.guard_hit_time.is_some_and(|s| s <= t) || r.snapshots[0].intersects(&eta_out)?;
        Ok((lhs, rhs))
    })?;
    let m = runs.len();
    let states = 1usize.checked_shl((2 * n as u32 + 3).pow(cfg.dim as u32)).unwrap_or(usize::MAX);
    let exact = if states <= STATE_CAP {
        Some(finite_duality_exact(cfg.dim, cfg.lambda, eta, a, n, t)?)
    } else {
        None
    };
    Ok(FiniteDualityReport {
        radius: n,
        t,
        lhs: bernoulli(t, runs.iter().filter(|r| r.0).count(), m),
        rhs: bernoulli(t, runs.iter().filter(|r| r.1).count(), m),
        exact_lhs: exact.map(|e| e.0),
        exact_rhs: exact.map(|e| e.1),
    })
}

/// `P(ξ^A_t ∩ B ≠ ∅)` computed exactly on a free window.
pub fn hitting_exact(dim: usize, radius: usize, lambda: f64, a: &[Vec<i64>], b: &[Vec<i64>], t: f64) -> Result<f64> {
    let q = build_generator(dim, radius, lambda, Flavor::Absorbing)?;
    let geom = q.space().geometry().clone();
    let (ma, mb) = (mask_of(&geom, a)?, mask_of(&geom, b)?);
    let f: Vec<f64> = (0..q.size() as u64).map(|s| (s & mb != 0) as u8 as f64).collect();
    Ok(semigroup_apply(&q, &f, t)?[ma as usize])
}
