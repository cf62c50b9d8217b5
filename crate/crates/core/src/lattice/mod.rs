//! Windows of `Z^d`, configurations over them, and local functions.

mod config;
mod geometry;
mod local;

pub use config::{Configuration, ConfigurationJson};
pub use geometry::{Boundary, Geometry, Neighbor, Site, MAX_DIM, MAX_RADIUS};
pub use local::{LocalFunction, ModelParams, MAX_SUPPORT};

use crate::error::Result;

/// Free-function form of [`Configuration::flip`].
pub fn flip(config: &Configuration, x: Site) -> Result<Configuration> {
    config.flip(x)
}

/// Free-function form of [`Geometry::neighbors`].
pub fn neighbors(geom: &Geometry, x: Site) -> Result<(Vec<Site>, usize)> {
    geom.neighbors(x)
}

/// Free-function form of [`Configuration::sym_diff`].
pub fn sym_diff(a: &Configuration, b: &Configuration) -> Result<(Vec<Site>, usize)> {
    a.sym_diff(b)
}

/// Free-function form of [`LocalFunction::delta_profile`].
pub fn delta_profile(f: &LocalFunction) -> Vec<(Vec<i64>, f64)> {
    f.delta_profile()
}
