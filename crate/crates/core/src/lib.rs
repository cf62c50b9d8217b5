//! Simulation and exact spectral toolkit for the super-critical contact
//! process on `Z^d`.
//!
//! - [`lattice`]: windows, configurations, local functions and their
//!   influence profiles.
//! - [`graphical`]: replayable Poisson clocks, event-driven evolution,
//!   couplings and the time-reversed dual.
//! - [`exact`]: generator matrices of the finite-volume chain, stationary
//!   measures, uniformized semigroup, complex spectrum and spectral gap.
//! - [`fpp`]: first-passage percolation with exponential edge weights.
//! - [`estimators`]: Monte Carlo experiments and exponential-rate fits.
//!
//! The guide in `book/` walks through each piece; its code blocks run as
//! doctests of this crate.

pub mod error;
pub mod estimators;
pub mod exact;
pub mod fpp;
pub mod graphical;
pub mod lattice;
pub mod seeds;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/lattice.md")]
    pub struct Lattice;
    #[doc = include_str!("../../../book/src/graphical.md")]
    pub struct Graphical;
    #[doc = include_str!("../../../book/src/finite-volume.md")]
    pub struct FiniteVolume;
    #[doc = include_str!("../../../book/src/fpp.md")]
    pub struct Fpp;
    #[doc = include_str!("../../../book/src/estimators.md")]
    pub struct Estimators;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
