//! The graphical construction: Poisson clocks, event-driven evolution,
//! couplings through shared clocks, and the time-reversed dual.

mod evolve;
mod stream;

pub use evolve::{
    evolve, evolve_coupled, stopping_times, EvolveConfig, LightConeGuard, LightConeTarget,
    RecoveryMask, StoppingTimes, Trajectory, TrajectoryJson,
};
pub use stream::{dual_reverse, make_stream, Event, EventStream, ObjectKind};

use crate::error::Result;
use crate::lattice::Configuration;

/// Default light-cone speed `2(1 + 2dλ)`.
pub fn default_kappa(dim: usize, lambda: f64) -> f64 {
    2.0 * (1.0 + 2.0 * dim as f64 * lambda)
}

/// Window radius that keeps a region of radius `inner` isolated from the
/// window edge up to time `t`: `inner + ceil(κ t) + 4`.
pub fn light_cone_radius(inner: usize, t: f64, kappa: f64) -> usize {
    inner + (kappa * t).ceil() as usize + 4
}

/// Whether `ξ^A_t ∩ B ≠ ∅` on the given stream, evolving up to time `t`.
pub fn hits(a: &Configuration, b: &Configuration, stream: &EventStream, t: f64) -> Result<bool> {
    let traj = evolve(a, stream, &EvolveConfig::new(vec![t]).until(t))?;
    traj.snapshots[0].intersects(b)
}

#[cfg(test)]
mod tests;
