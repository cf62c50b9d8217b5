//! Seed derivation for reproducible, scheduling-independent randomness.
//!
//! Every random object (a Poisson clock on a directed edge, an edge weight, a
//! replica) draws from its own ChaCha stream keyed by a master seed and an
//! object id, so nothing depends on the order in which objects are touched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a seed with a sequence of labels into a new seed.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(master ^ GOLDEN), |acc, &l| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(l.wrapping_add(GOLDEN)))
    })
}

/// Stable numeric id for an experiment name.
pub fn label(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Seed for replica `index` of experiment `experiment` under `master`.
pub fn replica_seed(master: u64, experiment: &str, index: u64) -> u64 {
    derive_seed(master, &[label(experiment), index])
}

/// Packs lattice coordinates (|c| < 2^15, at most 3 axes) and a 4-bit kind
/// into a u64. Injective on its domain.
pub fn object_id(coords: &[i64], kind: u64) -> u64 {
    debug_assert!(coords.len() <= 3 && kind < 16);
    coords
        .iter()
        .enumerate()
        .fold(kind, |id, (i, &c)| id | (((c + (1 << 15)) as u64 & 0xffff) << (4 + 16 * i)))
}

/// Independent generator for one object under a master seed.
pub fn substream(master: u64, object: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(object);
    rng
}
