use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported coordinate magnitude; coordinates are packed into 16 bits
/// when deriving per-object random substreams.
pub const MAX_RADIUS: usize = (1 << 15) - 1;
pub const MAX_DIM: usize = 3;

/// How a window `{-M..M}^d` talks to the rest of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// No sites outside the window.
    Free,
    /// Coordinates wrap around; every site has exactly `2d` neighbours.
    Periodic,
    /// Every site outside the window is permanently infected.
    InfectedExterior,
}

/// Lattice site as an index into the row-major enumeration of the window.
pub type Site = usize;

/// Neighbour of a site in a fixed direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Site(Site),
    Exterior,
}

/// A finite window `Λ_M = {-M..M}^d` of `Z^d` with a boundary mode.
///
/// Sites are enumerated row-major with the first coordinate most significant.
/// Directions are numbered `0..2d`: direction `2i` is `+e_i`, `2i+1` is `-e_i`,
/// so `k ^ 1` is the opposite of `k`.
#[derive(Debug, Clone)]
pub struct Geometry {
    dim: usize,
    radius: usize,
    boundary: Boundary,
    side: usize,
    sites: usize,
    neighbors: Vec<Neighbor>,
}

impl PartialEq for Geometry {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.radius == other.radius && self.boundary == other.boundary
    }
}

impl Eq for Geometry {}

impl std::hash::Hash for Geometry {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.dim, self.radius, self.boundary).hash(state);
    }
}

impl Geometry {
    pub fn new(dim: usize, radius: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGeometry(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if radius > MAX_RADIUS {
            return Err(Error::InvalidGeometry(format!(
                "radius {radius} exceeds {MAX_RADIUS}"
            )));
        }
        let side = 2 * radius + 1;
        let sites = side
            .checked_pow(dim as u32)
            .filter(|&s| s <= 1 << 26)
            .ok_or_else(|| Error::InvalidGeometry("window too large".into()))?;

        let mut geom = Geometry {
            dim,
            radius,
            boundary,
            side,
            sites,
            neighbors: Vec::with_capacity(sites * 2 * dim),
        };
        let mut coords = vec![0i64; dim];
        for x in 0..sites {
            geom.fill_coords(x, &mut coords);
            for k in 0..2 * dim {
                let axis = k / 2;
                let step = if k % 2 == 0 { 1 } else { -1 };
                let mut c = coords.clone();
                c[axis] += step;
                let r = radius as i64;
                let nb = if c[axis].abs() <= r {
                    Neighbor::Site(geom.index_unchecked(&c))
                } else if boundary == Boundary::Periodic {
                    c[axis] = if c[axis] > r { -r } else { r };
                    Neighbor::Site(geom.index_unchecked(&c))
                } else {
                    Neighbor::Exterior
                };
                geom.neighbors.push(nb);
            }
        }
        Ok(geom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    pub fn directions(&self) -> usize {
        2 * self.dim
    }

    pub fn origin(&self) -> Site {
        self.sites / 2
    }

    fn index_unchecked(&self, coords: &[i64]) -> Site {
        let r = self.radius as i64;
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + (c + r) as usize)
    }

    pub fn contains_coords(&self, coords: &[i64]) -> bool {
        coords.len() == self.dim && coords.iter().all(|c| c.unsigned_abs() as usize <= self.radius)
    }

    /// Index of the site with the given coordinates.
    pub fn index(&self, coords: &[i64]) -> Result<Site> {
        if !self.contains_coords(coords) {
            return Err(Error::OutsideWindow(coords.to_vec()));
        }
        Ok(self.index_unchecked(coords))
    }

    fn fill_coords(&self, mut x: Site, out: &mut [i64]) {
        let r = self.radius as i64;
        for c in out.iter_mut().rev() {
            *c = (x % self.side) as i64 - r;
            x /= self.side;
        }
    }

    pub fn coords(&self, x: Site) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        self.fill_coords(x, &mut out);
        out
    }

    pub fn check_site(&self, x: Site) -> Result<()> {
        if x < self.sites {
            Ok(())
        } else {
            Err(Error::SiteIndex(x))
        }
    }

    /// Sup-norm distance of a site from the origin.
    pub fn sup_norm(&self, x: Site) -> usize {
        let r = self.radius as i64;
        let mut x = x;
        let mut best = 0;
        for _ in 0..self.dim {
            best = best.max(((x % self.side) as i64 - r).unsigned_abs() as usize);
            x /= self.side;
        }
        best
    }

    /// Neighbour of `x` in direction `k`; `Exterior` only under `Free` and
    /// `InfectedExterior`.
    #[inline]
    pub fn neighbor(&self, x: Site, k: usize) -> Neighbor {
        self.neighbors[x * 2 * self.dim + k]
    }

    /// In-window neighbours of `x` and the number of edges leaving the window.
    pub fn neighbors(&self, x: Site) -> Result<(Vec<Site>, usize)> {
        self.check_site(x)?;
        let mut sites = Vec::with_capacity(2 * self.dim);
        let mut exterior = 0;
        for k in 0..2 * self.dim {
            match self.neighbor(x, k) {
                Neighbor::Site(y) => sites.push(y),
                Neighbor::Exterior => exterior += 1,
            }
        }
        Ok((sites, exterior))
    }

    /// Sites sorted by sup-norm distance from the origin, ties by index.
    pub fn sites_by_distance(&self) -> Vec<Site> {
        let mut v: Vec<Site> = (0..self.sites).collect();
        v.sort_by_key(|&x| (self.sup_norm(x), x));
        v
    }

    /// The window's outer shell of the given width: sites with `‖x‖∞ > M - width`.
    pub fn shell(&self, width: usize) -> Vec<Site> {
        (0..self.sites)
            .filter(|&x| self.sup_norm(x) + width > self.radius)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_count_and_roundtrip() {
        let g = Geometry::new(2, 3, Boundary::Free).unwrap();
        assert_eq!(g.site_count(), 49);
        for x in 0..g.site_count() {
            assert_eq!(g.index(&g.coords(x)).unwrap(), x);
        }
        assert_eq!(g.coords(g.origin()), vec![0, 0]);
        assert_eq!(g.coords(0), vec![-3, -3]);
        assert_eq!(g.coords(1), vec![-3, -2]);
    }

    #[test]
    fn one_dim_neighbors() {
        let g = Geometry::new(1, 2, Boundary::Free).unwrap();
        let (nb, ext) = g.neighbors(g.index(&[0]).unwrap()).unwrap();
        let mut c: Vec<_> = nb.iter().map(|&y| g.coords(y)[0]).collect();
        c.sort();
        assert_eq!(c, vec![-1, 1]);
        assert_eq!(ext, 0);

        let (nb, ext) = g.neighbors(g.index(&[2]).unwrap()).unwrap();
        assert_eq!(nb.iter().map(|&y| g.coords(y)).collect::<Vec<_>>(), vec![vec![1]]);
        assert_eq!(ext, 1);
    }

    #[test]
    fn periodic_corner_has_four_neighbors() {
        let g = Geometry::new(2, 1, Boundary::Periodic).unwrap();
        let (nb, ext) = g.neighbors(g.index(&[1, 1]).unwrap()).unwrap();
        assert_eq!(nb.len(), 4);
        assert_eq!(ext, 0);
        let mut c: Vec<_> = nb.iter().map(|&y| g.coords(y)).collect();
        c.sort();
        assert_eq!(c, vec![vec![-1, 1], vec![0, 1], vec![1, -1], vec![1, 0]]);
    }

    #[test]
    fn periodic_is_symmetric_and_regular() {
        for (d, m) in [(1, 3), (2, 2), (3, 1)] {
            let g = Geometry::new(d, m, Boundary::Periodic).unwrap();
            for x in 0..g.site_count() {
                let (nb, ext) = g.neighbors(x).unwrap();
                assert_eq!(nb.len(), 2 * d);
                assert_eq!(ext, 0);
                for k in 0..2 * d {
                    let Neighbor::Site(y) = g.neighbor(x, k) else { panic!() };
                    assert_eq!(g.neighbor(y, k ^ 1), Neighbor::Site(x));
                }
            }
        }
    }

    #[test]
    fn neighbors_are_at_unit_distance() {
        let g = Geometry::new(2, 2, Boundary::InfectedExterior).unwrap();
        for x in 0..g.site_count() {
            let (nb, ext) = g.neighbors(x).unwrap();
            assert_eq!(nb.len() + ext, 4);
            let cx = g.coords(x);
            for y in nb {
                let cy = g.coords(y);
                let l1: i64 = cx.iter().zip(&cy).map(|(a, b)| (a - b).abs()).sum();
                assert_eq!(l1, 1);
            }
        }
    }

    #[test]
    fn out_of_window_is_an_error() {
        let g = Geometry::new(1, 2, Boundary::Free).unwrap();
        assert!(matches!(g.index(&[3]), Err(Error::OutsideWindow(_))));
        assert!(g.neighbors(5).is_err());
        assert!(Geometry::new(0, 1, Boundary::Free).is_err());
        assert!(Geometry::new(4, 1, Boundary::Free).is_err());
    }

    #[test]
    fn shell_and_distance_order() {
        let g = Geometry::new(1, 4, Boundary::Free).unwrap();
        let shell: Vec<_> = g.shell(2).iter().map(|&x| g.coords(x)[0]).collect();
        assert_eq!(shell, vec![-4, -3, 3, 4]);
        let order: Vec<_> = g.sites_by_distance().iter().map(|&x| g.coords(x)[0]).collect();
        assert_eq!(&order[..5], &[0, -1, 1, -2, 2]);
    }
}
