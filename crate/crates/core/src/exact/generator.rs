use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Configuration, Geometry, LocalFunction, Neighbor};
use num_complex::Complex64;

/// Largest state space a generator is built for.
pub const STATE_CAP: usize = 1 << 16;
/// Largest state space converted to a dense matrix (direct solves, eigenvalues).
pub const DENSE_CAP: usize = 1 << 11;

/// Which finite-volume chain a generator describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    /// Every site outside `Λ_N` is infected forever (irreducible).
    InfectedBoundary,
    /// Free boundary; the empty configuration is absorbing.
    Absorbing,
    /// Free boundary; every state meeting the guard mask is frozen.
    StoppedOnGuard(u64),
}

impl Flavor {
    fn boundary(self) -> Boundary {
        match self {
            Flavor::InfectedBoundary => Boundary::InfectedExterior,
            Flavor::Absorbing | Flavor::StoppedOnGuard(_) => Boundary::Free,
        }
    }
}

/// States of the chain on `Λ_N`: state `s` is the configuration whose
/// infected sites are the set bits of `s`, so state 0 is the empty set.
///
/// A coupled space of `k` copies packs copy `i` into bits
/// `i·|Λ_N| .. (i+1)·|Λ_N|`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    geom: Arc<Geometry>,
    copies: usize,
}

impl StateSpace {
    pub fn new(geom: Arc<Geometry>) -> Result<Self> {
        Self::coupled(geom, 1)
    }

    pub fn coupled(geom: Arc<Geometry>, copies: usize) -> Result<Self> {
        let bits = geom.site_count() * copies;
        if copies == 0 || bits >= 63 || (1usize << bits) > STATE_CAP {
            return Err(Error::StateCap {
                states: if bits >= 63 { usize::MAX } else { 1 << bits },
                cap: STATE_CAP,
            });
        }
        Ok(StateSpace { geom, copies })
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Mask of copy `i` inside a coupled state.
    pub fn copy_mask(&self, state: u64, i: usize) -> u64 {
        let n = self.geom.site_count();
        state >> (i * n) & ((1u64 << n) - 1)
    }

    /// Coupled state holding the given per-copy masks.
    pub fn pack(&self, masks: &[u64]) -> u64 {
        let n = self.geom.site_count();
        masks.iter().enumerate().fold(0, |acc, (i, &m)| acc | m << (i * n))
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn size(&self) -> usize {
        1 << (self.geom.site_count() * self.copies)
    }

    pub fn config(&self, state: usize) -> Result<Configuration> {
        Configuration::from_mask(&self.geom, state as u64)
    }

    pub fn state_of(&self, c: &Configuration) -> Result<usize> {
        if **c.geometry() != *self.geom {
            return Err(Error::GeometryMismatch("configuration is not on this window".into()));
        }
        Ok(c.to_mask()? as usize)
    }

    /// `f` evaluated on every state.
    pub fn function_vector(&self, f: &LocalFunction) -> Vec<Complex64> {
        let bound = f.bind(&self.geom);
        let ext = self.geom.boundary() == Boundary::InfectedExterior;
        (0..self.size() as u64)
            .map(|s| f.eval_mask(&bound, s, ext))
            .collect()
    }

    pub fn real_vector<F: Fn(u64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.size() as u64).map(f).collect()
    }
}

/// Sparse generator `Q` of a finite-volume contact process: off-diagonal
/// rates row by row plus the diagonal. Rows sum to zero.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    space: StateSpace,
    flavor: Flavor,
    lambda: f64,
    rows: Vec<Vec<(u32, f64)>>,
    diag: Vec<f64>,
}

/// Generator of the contact process on `Λ_N = {-N..N}^d`.
///
/// From state `s`, site `x` flips at rate 1 if infected and at rate
/// `λ · #(infected neighbours)` if healthy; under `InfectedBoundary` every
/// neighbour outside the window counts as infected.
pub fn build_generator(dim: usize, n: usize, lambda: f64, flavor: Flavor) -> Result<RateMatrix> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
    }
    let geom = Arc::new(Geometry::new(dim, n, flavor.boundary())?);
    let sites = geom.site_count();
    let space = StateSpace::new(Arc::clone(&geom))?;
    let size = space.size();
    let ext = flavor == Flavor::InfectedBoundary;
    let mut rows = Vec::with_capacity(size);
    let mut diag = Vec::with_capacity(size);
    for s in 0..size as u64 {
        let frozen = match flavor {
            Flavor::StoppedOnGuard(g) => s & g != 0,
            _ => false,
        };
        let mut row = Vec::new();
        if !frozen {
            for x in 0..sites {
                let rate = if s >> x & 1 == 1 {
                    1.0
                } else {
                    let infected = (0..geom.directions())
                        .filter(|&k| match geom.neighbor(x, k) {
                            Neighbor::Site(y) => s >> y & 1 == 1,
                            Neighbor::Exterior => ext,
                        })
                        .count();
                    lambda * infected as f64
                };
                if rate > 0.0 {
                    row.push(((s ^ 1 << x) as u32, rate));
                }
            }
        }
        diag.push(-row.iter().map(|&(_, r)| r).sum::<f64>());
        rows.push(row);
    }
    Ok(RateMatrix {
        space,
        flavor,
        lambda,
        rows,
        diag,
    })
}

/// Generator of `copies` contact processes driven by the same graphical
/// construction (the basic coupling). A recovery mark at `x` heals `x` in
/// every copy; an arrow `z → x` infects `x` in every copy where `z` is
/// infected, and exterior arrows infect `x` in all copies. Under
/// `StoppedOnGuard` a state freezes once any copy meets the guard.
pub fn build_coupled_generator(
    dim: usize,
    n: usize,
    lambda: f64,
    flavor: Flavor,
    copies: usize,
) -> Result<RateMatrix> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
    }
    let geom = Arc::new(Geometry::new(dim, n, flavor.boundary())?);
    let space = StateSpace::coupled(Arc::clone(&geom), copies)?;
    let sites = geom.site_count();
    let ext = flavor == Flavor::InfectedBoundary;
    let mut rows = Vec::with_capacity(space.size());
    let mut diag = Vec::with_capacity(space.size());
    let mut targets: Vec<(u32, f64)> = Vec::new();
    for s in 0..space.size() as u64 {
        let masks: Vec<u64> = (0..copies).map(|i| space.copy_mask(s, i)).collect();
        let frozen = match flavor {
            Flavor::StoppedOnGuard(g) => masks.iter().any(|m| m & g != 0),
            _ => false,
        };
        targets.clear();
        if !frozen {
            for x in 0..sites {
                let bit = 1u64 << x;
                // recovery
                let healed: Vec<u64> = masks.iter().map(|m| m & !bit).collect();
                let t = space.pack(&healed);
                if t != s {
                    targets.push((t as u32, 1.0));
                }
                // one arrow per incoming direction
                for k in 0..geom.directions() {
                    let infected: Vec<u64> = match geom.neighbor(x, k) {
                        Neighbor::Site(z) => masks
                            .iter()
                            .map(|m| if m >> z & 1 == 1 { m | bit } else { *m })
                            .collect(),
                        Neighbor::Exterior if ext => masks.iter().map(|m| m | bit).collect(),
                        Neighbor::Exterior => continue,
                    };
                    let t = space.pack(&infected);
                    if t != s && lambda > 0.0 {
                        targets.push((t as u32, lambda));
                    }
                }
            }
        }
        targets.sort_by_key(|e| e.0);
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(targets.len());
        for &(t, r) in &targets {
            match row.last_mut() {
                Some(last) if last.0 == t => last.1 += r,
                _ => row.push((t, r)),
            }
        }
        diag.push(-row.iter().map(|&(_, r)| r).sum::<f64>());
        rows.push(row);
    }
    Ok(RateMatrix {
        space,
        flavor,
        lambda,
        rows,
        diag,
    })
}

impl RateMatrix {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.space.geom.dim()
    }

    pub fn radius(&self) -> usize {
        self.space.geom.radius()
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn row(&self, s: usize) -> &[(u32, f64)] {
        &self.rows[s]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.rows[i]
                .iter()
                .find(|&&(k, _)| k as usize == j)
                .map_or(0.0, |&(_, r)| r)
        }
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Largest exit rate `max_s |Q(s,s)|`.
    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }

    /// `(Qf)(s) = Σ_t Q(s,t) f(t)`.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        for (s, row) in self.rows.iter().enumerate() {
            out[s] = self.diag[s] * f[s] + row.iter().map(|&(t, r)| r * f[t as usize]).sum::<f64>();
        }
    }

    /// `(μQ)(t) = Σ_s μ(s) Q(s,t)`.
    pub fn apply_left(&self, mu: &[f64], out: &mut [f64]) {
        for (o, (&m, &d)) in out.iter_mut().zip(mu.iter().zip(&self.diag)) {
            *o = m * d;
        }
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, r) in row {
                out[t as usize] += mu[s] * r;
            }
        }
    }

    /// Dense row-major copy of `Q`.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.size();
        if n > DENSE_CAP {
            return Err(Error::StateCap { states: n, cap: DENSE_CAP });
        }
        let mut a = vec![0.0; n * n];
        for (s, row) in self.rows.iter().enumerate() {
            a[s * n + s] = self.diag[s];
            for &(t, r) in row {
                a[s * n + t as usize] = r;
            }
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_infected_boundary() {
        let q = build_generator(1, 0, 1.0, Flavor::InfectedBoundary).unwrap();
        assert_eq!(q.to_dense().unwrap(), vec![-2.0, 2.0, 1.0, -1.0]);
    }

    #[test]
    fn rows_sum_to_zero_and_offdiagonals_nonnegative() {
        for flavor in [Flavor::InfectedBoundary, Flavor::Absorbing, Flavor::StoppedOnGuard(0b10001)] {
            for (d, n) in [(1, 0), (1, 1), (1, 2), (2, 1)] {
                let q = build_generator(d, n, 1.7, flavor).unwrap();
                for s in 0..q.size() {
                    let sum: f64 = q.diagonal()[s] + q.row(s).iter().map(|e| e.1).sum::<f64>();
                    assert!(sum.abs() < 1e-12);
                    for &(t, r) in q.row(s) {
                        assert!(r > 0.0);
                        assert_eq!((s ^ t as usize).count_ones(), 1, "Hamming distance 1");
                    }
                }
            }
        }
    }

    #[test]
    fn absorbing_empty_row_is_zero() {
        let q = build_generator(1, 1, 2.0, Flavor::Absorbing).unwrap();
        assert!(q.row(0).is_empty());
        assert_eq!(q.diagonal()[0], 0.0);
        let dense = q.to_dense().unwrap();
        assert!(dense[..8].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn explicit_rates_on_three_sites() {
        // sites -1,0,1 are bits 0,1,2
        let q = build_generator(1, 1, 2.0, Flavor::InfectedBoundary).unwrap();
        // from ∅: end sites see one infected exterior neighbour, the centre none
        assert_eq!(q.entry(0, 0b001), 2.0);
        assert_eq!(q.entry(0, 0b100), 2.0);
        assert_eq!(q.entry(0, 0b010), 0.0);
        // from {0}: both ends see exterior + centre
        assert_eq!(q.entry(0b010, 0b011), 4.0);
        assert_eq!(q.entry(0b010, 0b000), 1.0);
        let a = build_generator(1, 1, 2.0, Flavor::Absorbing).unwrap();
        assert_eq!(a.entry(0b010, 0b011), 2.0);
        assert_eq!(a.entry(0b001, 0b011), 2.0);
        assert_eq!(a.entry(0b001, 0b101), 0.0);
    }

    #[test]
    fn one_copy_coupling_is_the_plain_generator() {
        for flavor in [Flavor::InfectedBoundary, Flavor::Absorbing, Flavor::StoppedOnGuard(0b10001)] {
            let a = build_generator(1, 2, 1.3, flavor).unwrap();
            let b = build_coupled_generator(1, 2, 1.3, flavor, 1).unwrap();
            let (a, b) = (a.to_dense().unwrap(), b.to_dense().unwrap());
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn coupled_marginals_are_plain_chains() {
        // each copy of the coupled chain is itself a contact process: lumping
        // the coupled generator onto copy 1 reproduces the plain generator
        let q = build_generator(1, 1, 1.7, Flavor::InfectedBoundary).unwrap();
        let c = build_coupled_generator(1, 1, 1.7, Flavor::InfectedBoundary, 2).unwrap();
        let sp = c.space();
        for s in 0..c.size() as u64 {
            let a = sp.copy_mask(s, 1) as usize;
            let mut lumped = vec![0.0; q.size()];
            lumped[a] += c.diagonal()[s as usize];
            for &(t, r) in c.row(s as usize) {
                lumped[sp.copy_mask(t as u64, 1) as usize] += r;
            }
            for (b, v) in lumped.iter().enumerate() {
                assert!((v - q.entry(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coupled_order_is_preserved() {
        // from an ordered pair a ⊆ b every reachable pair stays ordered
        let c = build_coupled_generator(1, 1, 2.0, Flavor::Absorbing, 2).unwrap();
        let sp = c.space();
        for s in 0..c.size() as u64 {
            let (a, b) = (sp.copy_mask(s, 0), sp.copy_mask(s, 1));
            if a & !b != 0 {
                continue;
            }
            for &(t, _) in c.row(s as usize) {
                let (a2, b2) = (sp.copy_mask(t as u64, 0), sp.copy_mask(t as u64, 1));
                assert_eq!(a2 & !b2, 0);
            }
        }
    }

    #[test]
    fn state_cap_enforced() {
        assert!(matches!(
            build_generator(1, 8, 1.0, Flavor::InfectedBoundary),
            Err(Error::StateCap { .. })
        ));
        assert!(matches!(
            build_coupled_generator(1, 4, 1.0, Flavor::Absorbing, 2),
            Err(Error::StateCap { .. })
        ));
        let big = build_generator(1, 6, 1.0, Flavor::InfectedBoundary).unwrap();
        assert_eq!(big.size(), 1 << 13);
        assert!(matches!(big.to_dense(), Err(Error::StateCap { .. })));
    }
}
