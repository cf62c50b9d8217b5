use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::geometry::{Boundary, Geometry, Site};
use crate::error::{Error, Result};

/// Set of infected sites in a window plus the value read outside it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    geom: Arc<Geometry>,
    infected: FixedBitSet,
    exterior: bool,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Configuration(d={}, M={}, {:?}, {})",
            self.geom.dim(),
            self.geom.radius(),
            self.geom.boundary(),
            self.to_hex()
        )
    }
}

fn exterior_for(geom: &Geometry) -> bool {
    geom.boundary() == Boundary::InfectedExterior
}

impl Configuration {
    /// All window sites healthy. The exterior follows the boundary mode.
    pub fn empty(geom: &Arc<Geometry>) -> Self {
        Configuration {
            geom: Arc::clone(geom),
            infected: FixedBitSet::with_capacity(geom.site_count()),
            exterior: exterior_for(geom),
        }
    }

    pub fn full(geom: &Arc<Geometry>) -> Self {
        let mut c = Self::empty(geom);
        c.infected.insert_range(..);
        c
    }

    pub fn from_sites<I: IntoIterator<Item = Site>>(geom: &Arc<Geometry>, sites: I) -> Result<Self> {
        let mut c = Self::empty(geom);
        for x in sites {
            geom.check_site(x)?;
            c.infected.insert(x);
        }
        Ok(c)
    }

    pub fn from_coords<'a, I>(geom: &Arc<Geometry>, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [i64]>,
    {
        let mut c = Self::empty(geom);
        for p in points {
            c.infected.insert(geom.index(p)?);
        }
        Ok(c)
    }

    pub fn from_bits(geom: &Arc<Geometry>, infected: FixedBitSet) -> Result<Self> {
        if infected.len() != geom.site_count() {
            return Err(Error::GeometryMismatch(format!(
                "bitset length {} != site count {}",
                infected.len(),
                geom.site_count()
            )));
        }
        Ok(Configuration {
            geom: Arc::clone(geom),
            infected,
            exterior: exterior_for(geom),
        })
    }

    /// Configuration from the low `site_count` bits of `mask` (bit `i` = site `i`).
    pub fn from_mask(geom: &Arc<Geometry>, mask: u64) -> Result<Self> {
        let n = geom.site_count();
        if n > 64 || (n < 64 && mask >> n != 0) {
            return Err(Error::GeometryMismatch(format!(
                "mask {mask:#x} does not fit {n} sites"
            )));
        }
        Self::from_sites(geom, (0..n).filter(|i| mask >> i & 1 == 1))
    }

    pub fn to_mask(&self) -> Result<u64> {
        if self.geom.site_count() > 64 {
            return Err(Error::GeometryMismatch("more than 64 sites".into()));
        }
        Ok(self.infected.ones().fold(0u64, |m, i| m | 1 << i))
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.infected
    }

    pub fn exterior(&self) -> bool {
        self.exterior
    }

    pub fn is_infected(&self, x: Site) -> bool {
        self.infected.contains(x)
    }

    pub fn infected_count(&self) -> usize {
        self.infected.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_clear()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.infected.ones()
    }

    /// The configuration flipped at `x`.
    pub fn flip(&self, x: Site) -> Result<Configuration> {
        self.geom.check_site(x)?;
        let mut c = self.clone();
        c.infected.toggle(x);
        Ok(c)
    }

    pub fn set(&mut self, x: Site, infected: bool) -> Result<()> {
        self.geom.check_site(x)?;
        self.infected.set(x, infected);
        Ok(())
    }

    fn check_same(&self, other: &Configuration) -> Result<()> {
        if *self.geom != *other.geom {
            return Err(Error::GeometryMismatch(format!(
                "{:?} vs {:?}",
                (self.geom.dim(), self.geom.radius(), self.geom.boundary()),
                (other.geom.dim(), other.geom.radius(), other.geom.boundary()),
            )));
        }
        Ok(())
    }

    /// Symmetric difference of two configurations: its sites and its size.
    pub fn sym_diff(&self, other: &Configuration) -> Result<(Vec<Site>, usize)> {
        self.check_same(other)?;
        let sites: Vec<Site> = self.infected.symmetric_difference(&other.infected).collect();
        let n = sites.len();
        Ok((sites, n))
    }

    pub fn is_subset(&self, other: &Configuration) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.infected.is_subset(&other.infected))
    }

    pub fn union(&self, other: &Configuration) -> Result<Configuration> {
        self.check_same(other)?;
        let mut c = self.clone();
        c.infected.union_with(&other.infected);
        Ok(c)
    }

    pub fn intersects(&self, other: &Configuration) -> Result<bool> {
        self.check_same(other)?;
        Ok(!self.infected.is_disjoint(&other.infected))
    }

    /// Restriction to (or extension by healthy sites into) another window,
    /// matching sites by coordinates.
    pub fn restrict_to(&self, geom: &Arc<Geometry>) -> Result<Configuration> {
        if geom.dim() != self.geom.dim() {
            return Err(Error::GeometryMismatch("dimension differs".into()));
        }
        let mut c = Configuration::empty(geom);
        for x in self.infected.ones() {
            let p = self.geom.coords(x);
            if geom.contains_coords(&p) {
                c.infected.insert(geom.index(&p)?);
            }
        }
        Ok(c)
    }

    /// Hex string of the window bits: byte `i` holds sites `8i..8i+8`,
    /// lowest site in the least significant bit.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.geom.site_count().div_ceil(8)];
        for x in self.infected.ones() {
            bytes[x / 8] |= 1 << (x % 8);
        }
        hex::encode(bytes)
    }

    pub fn from_hex(geom: &Arc<Geometry>, s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(e.to_string()))?;
        let n = geom.site_count();
        if bytes.len() != n.div_ceil(8) {
            return Err(Error::Parse(format!(
                "expected {} hex bytes for {n} sites, got {}",
                n.div_ceil(8),
                bytes.len()
            )));
        }
        let mut c = Configuration::empty(geom);
        for (i, b) in bytes.iter().enumerate() {
            for j in 0..8 {
                if b >> j & 1 == 1 {
                    let x = 8 * i + j;
                    if x >= n {
                        return Err(Error::Parse("bits set beyond the site count".into()));
                    }
                    c.infected.insert(x);
                }
            }
        }
        Ok(c)
    }

    pub fn to_json(&self) -> ConfigurationJson {
        ConfigurationJson {
            dim: self.geom.dim(),
            radius: self.geom.radius(),
            boundary: self.geom.boundary(),
            exterior: u8::from(self.exterior),
            bits: self.to_hex(),
        }
    }
}

/// Wire form of a configuration: geometry header plus hex bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationJson {
    pub dim: usize,
    pub radius: usize,
    pub boundary: Boundary,
    pub exterior: u8,
    pub bits: String,
}

impl ConfigurationJson {
    pub fn into_configuration(self) -> Result<Configuration> {
        let geom = Arc::new(Geometry::new(self.dim, self.radius, self.boundary)?);
        let expected = u8::from(exterior_for(&geom));
        if self.exterior != expected {
            return Err(Error::Parse(format!(
                "exterior value {} inconsistent with boundary {:?}",
                self.exterior, self.boundary
            )));
        }
        Configuration::from_hex(&geom, &self.bits)
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ConfigurationJson::deserialize(d)?
            .into_configuration()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(m: usize) -> Arc<Geometry> {
        Arc::new(Geometry::new(1, m, Boundary::Free).unwrap())
    }

    #[test]
    fn flip_origin_of_empty() {
        let g = line(3);
        let c = Configuration::empty(&g).flip(g.origin()).unwrap();
        assert_eq!(c.sites().collect::<Vec<_>>(), vec![g.origin()]);
        assert!(Configuration::empty(&g).flip(7).is_err());
    }

    #[test]
    fn exterior_follows_boundary() {
        let g = Arc::new(Geometry::new(1, 1, Boundary::InfectedExterior).unwrap());
        assert!(Configuration::empty(&g).exterior());
        assert!(!Configuration::empty(&line(1)).exterior());
    }

    #[test]
    fn sym_diff_cases() {
        let g = line(4);
        let a = Configuration::from_sites(&g, [0, 3, 5]).unwrap();
        assert_eq!(a.sym_diff(&a).unwrap(), (vec![], 0));
        assert_eq!(a.sym_diff(&a.flip(2).unwrap()).unwrap(), (vec![2], 1));
        let other = Configuration::empty(&line(3));
        assert!(a.sym_diff(&other).is_err());
    }

    #[test]
    fn json_roundtrip_and_layout() {
        let g = Arc::new(Geometry::new(2, 1, Boundary::InfectedExterior).unwrap());
        let c = Configuration::from_sites(&g, [0, 8]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"dim":2,"radius":1,"boundary":"infected-exterior","exterior":1,"bits":"0101"}"#
        );
        let back: Configuration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = s.replace(r#""exterior":1"#, r#""exterior":0"#);
        assert!(serde_json::from_str::<Configuration>(&bad).is_err());
    }

    #[test]
    fn restriction_matches_by_coordinates() {
        let big = line(5);
        let small = line(1);
        let c = Configuration::from_coords(&big, [&[-1i64][..], &[4][..]]).unwrap();
        let r = c.restrict_to(&small).unwrap();
        assert_eq!(r.sites().map(|x| small.coords(x)[0]).collect::<Vec<_>>(), vec![-1]);
    }

    fn arb_config(m: usize) -> impl Strategy<Value = Configuration> {
        let g = line(m);
        let n = g.site_count();
        prop::collection::vec(any::<bool>(), n).prop_map(move |bits| {
            Configuration::from_sites(&g, bits.iter().enumerate().filter(|b| *b.1).map(|b| b.0))
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(c in arb_config(6), x in 0usize..13) {
            let f = c.flip(x).unwrap();
            prop_assert_eq!(f.flip(x).unwrap(), c.clone());
            let delta = f.infected_count() as i64 - c.infected_count() as i64;
            prop_assert_eq!(delta.abs(), 1);
            prop_assert_eq!(c.sym_diff(&f).unwrap(), (vec![x], 1));
        }

        #[test]
        fn sym_diff_counts_xor(a in arb_config(6), b in arb_config(6)) {
            let (_, n) = a.sym_diff(&b).unwrap();
            let xor = (a.to_mask().unwrap() ^ b.to_mask().unwrap()).count_ones() as usize;
            prop_assert_eq!(n, xor);
            prop_assert_eq!(n == 0, a == b);
        }

        #[test]
        fn hex_roundtrip(c in arb_config(9)) {
            let back = Configuration::from_hex(c.geometry(), &c.to_hex()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
