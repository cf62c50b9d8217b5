//! Exact computations for the contact process on a finite window.

mod eigen;
mod generator;
mod marginal;
mod semigroup;
mod spectrum;
mod stationary;

pub use eigen::eigenvalues;
pub use generator::{build_coupled_generator, build_generator, Flavor, RateMatrix, StateSpace, DENSE_CAP, STATE_CAP};
pub use marginal::{marginal, restrict_mask};
pub use semigroup::{
    exact_extinction, semigroup_apply, semigroup_apply_bounded, semigroup_apply_complex, Propagated, MAX_TERMS,
    TAIL_TOL,
};
pub use spectrum::{
    clusters, eigenvector, null_vectors, slowest_overlapping_mode, spectral_gap, spectrum, OverlapMode, Spectrum,
    SpectrumJson,
};
pub use stationary::{stationary, stationary_power, variance, variance_real, StationaryVector, STATIONARY_TOL};
