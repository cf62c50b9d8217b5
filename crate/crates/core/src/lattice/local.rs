use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::Configuration;
use super::geometry::Geometry;
use crate::error::{Error, Result};

pub const MAX_SUPPORT: usize = 16;

/// Contact-process parameters. The recovery rate is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
}

impl ModelParams {
    /// `lambda = 0` is accepted as the pure-death degenerate case.
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "infection rate must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(ModelParams { lambda })
    }
}

/// A function of finitely many sites, stored as an explicit table.
///
/// Entry `r` of the table is the value on the restriction whose bit `j` says
/// whether `support[j]` is infected. Support points are lattice coordinates,
/// so the same function evaluates on windows of any size; points outside a
/// window read the window's exterior value.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunction {
    support: Vec<Vec<i64>>,
    table: Vec<Complex64>,
    delta: Vec<f64>,
}

impl LocalFunction {
    pub fn new(support: Vec<Vec<i64>>, table: Vec<Complex64>) -> Result<Self> {
        if support.len() > MAX_SUPPORT {
            return Err(Error::InvalidParameter(format!(
                "support of size {} exceeds {MAX_SUPPORT}",
                support.len()
            )));
        }
        if table.len() != 1 << support.len() {
            return Err(Error::InvalidParameter(format!(
                "table has {} entries, expected {}",
                table.len(),
                1usize << support.len()
            )));
        }
        for (i, p) in support.iter().enumerate() {
            if support[..i].contains(p) {
                return Err(Error::InvalidParameter(format!("duplicate support point {p:?}")));
            }
            if p.len() != support[0].len() {
                return Err(Error::InvalidParameter("support points differ in dimension".into()));
            }
        }
        let delta = (0..support.len())
            .map(|j| {
                (0..table.len())
                    .filter(|r| r >> j & 1 == 0)
                    .map(|r| (table[r | 1 << j] - table[r]).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(LocalFunction {
            support,
            table,
            delta,
        })
    }

    pub fn from_fn<F: Fn(u32) -> Complex64>(support: Vec<Vec<i64>>, f: F) -> Result<Self> {
        if support.len() > MAX_SUPPORT {
            return Err(Error::InvalidParameter("support too large".into()));
        }
        let table = (0..1u32 << support.len()).map(f).collect();
        Self::new(support, table)
    }

    pub fn from_real_fn<F: Fn(u32) -> f64>(support: Vec<Vec<i64>>, f: F) -> Result<Self> {
        Self::from_fn(support, |r| Complex64::new(f(r), 0.0))
    }

    /// `f(η) = η(point)`.
    pub fn indicator(point: Vec<i64>) -> Self {
        Self::from_real_fn(vec![point], |r| r as f64).expect("single-site support")
    }

    pub fn constant(value: f64) -> Self {
        Self::new(vec![], vec![Complex64::new(value, 0.0)]).expect("empty support")
    }

    /// Number of infected sites among `points`.
    pub fn infected_count(points: Vec<Vec<i64>>) -> Result<Self> {
        Self::from_real_fn(points, |r| r.count_ones() as f64)
    }

    pub fn support(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn table(&self) -> &[Complex64] {
        &self.table
    }

    pub fn is_real(&self) -> bool {
        self.table.iter().all(|z| z.im == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Site indices of the support in `geom`; `None` for points outside it.
    pub fn bind(&self, geom: &Geometry) -> Vec<Option<usize>> {
        self.support.iter().map(|p| geom.index(p).ok()).collect()
    }

    fn restriction_with<F: Fn(Option<usize>) -> bool>(&self, bound: &[Option<usize>], read: F) -> usize {
        bound
            .iter()
            .enumerate()
            .fold(0, |r, (j, &x)| if read(x) { r | 1 << j } else { r })
    }

    pub fn eval(&self, c: &Configuration) -> Complex64 {
        let bound = self.bind(c.geometry());
        self.eval_bound(&bound, c)
    }

    /// Evaluation with a precomputed [`bind`](Self::bind).
    pub fn eval_bound(&self, bound: &[Option<usize>], c: &Configuration) -> Complex64 {
        let r = self.restriction_with(bound, |x| match x {
            Some(x) => c.is_infected(x),
            None => c.exterior(),
        });
        self.table[r]
    }

    /// Evaluation on a window state given as a bitmask over its sites.
    pub fn eval_mask(&self, bound: &[Option<usize>], mask: u64, exterior: bool) -> Complex64 {
        let r = self.restriction_with(bound, |x| match x {
            Some(x) => mask >> x & 1 == 1,
            None => exterior,
        });
        self.table[r]
    }

    /// The influence profile `δ_f(x) = sup_η |f(η^x) − f(η)|` over the support.
    pub fn delta_profile(&self) -> Vec<(Vec<i64>, f64)> {
        self.support.iter().cloned().zip(self.delta.iter().copied()).collect()
    }

    /// `δ_f` at an arbitrary point; zero off the support.
    pub fn delta_at(&self, point: &[i64]) -> f64 {
        self.support
            .iter()
            .position(|p| p == point)
            .map_or(0.0, |j| self.delta[j])
    }

    pub fn delta_sq_sum(&self) -> f64 {
        self.delta.iter().map(|d| d * d).sum()
    }
}
