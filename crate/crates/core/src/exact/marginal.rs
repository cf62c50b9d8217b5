use super::generator::StateSpace;
use crate::error::{Error, Result};
use crate::lattice::Geometry;

/// Mask on the inner window `geom` of a state of `space`, matching sites by
/// coordinates.
pub fn restrict_mask(space: &StateSpace, inner: &Geometry, state: u64) -> Result<u64> {
    let outer = space.geometry();
    if inner.dim() != outer.dim() || inner.radius() > outer.radius() {
        return Err(Error::GeometryMismatch(format!(
            "window of radius {} does not fit in radius {}",
            inner.radius(),
            outer.radius()
        )));
    }
    let mut out = 0u64;
    for y in 0..inner.site_count() {
        let x = outer.index(&inner.coords(y))?;
        out |= (state >> x & 1) << y;
    }
    Ok(out)
}

/// Push-forward of a distribution on `space` to the configurations of the
/// inner window `{-L..L}^d`.
pub fn marginal(space: &StateSpace, probabilities: &[f64], inner: &Geometry) -> Result<Vec<f64>> {
    if probabilities.len() != space.size() {
        return Err(Error::GeometryMismatch("distribution length differs from state count".into()));
    }
    if inner.site_count() > 20 {
        return Err(Error::StateCap {
            states: 1 << inner.site_count().min(40),
            cap: 1 << 20,
        });
    }
    let mut out = vec![0.0; 1 << inner.site_count()];
    for (s, &p) in probabilities.iter().enumerate() {
        out[restrict_mask(space, inner, s as u64)? as usize] += p;
    }
    Ok(out)
}
