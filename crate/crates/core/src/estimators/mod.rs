//! Monte Carlo experiments built on the graphical construction, with
//! exponential-rate fits.
//!
//! Every experiment takes an [`MCConfig`]. On [`Domain::Lattice`] the runs
//! emulate `Z^d` inside light-cone boxes; on [`Domain::Window`] they run in a
//! fixed finite window, where the [`exact`](crate::exact) engine provides
//! the true values.

mod config;
mod coupling;
mod duality;
mod extinction;
mod fit;
mod growth;
mod runner;
mod series;
mod tv;
mod variance;

pub use config::{Domain, MCConfig, GUARD_SHELL, MIN_REPLICAS};
pub use fit::{fit_exponential, fit_linear, DroppedPoint, FitResult, MIN_FIT_POINTS};
pub use runner::{run_replicas, sample_mu, MuSamples};
pub use series::{bernoulli, centred_second_moment, mean_estimate, quantile_estimate, Estimate, EstimateSeries};
pub use coupling::{cluster_second_moment, discrepancy_and_cluster, discrepancy_decay, ClusterReport, DiscrepancyReport};
pub use duality::{duality_check, finite_duality_check, finite_duality_exact, hitting_exact, DualityReport, FiniteDualityReport};
pub use extinction::{centred_box, extinction_by_time, extinction_profile, survival_probability, ExtinctionProfile};
pub use growth::{growth_given_survival, GrowthReport, GROWTH_QUANTILE, MIN_SURVIVORS};
pub use variance::{gap_reference, variance_decay, GapReference, VarianceReport};
pub use tv::{finite_marginal, tv_distance, tv_marginal_distance, Marginal, TvPoint, TvReport, TV_CELL_CAP};
