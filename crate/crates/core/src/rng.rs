//! Seeded random streams.
//!
//! A run owns one 64-bit seed. Each consumer forks a named stream from it, so
//! adding draws in one module never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Root of the named streams for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for `name`.
    pub fn fork(&self, name: &str) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(name.as_bytes()));
        rng
    }

    /// Independent generator for the `index`-th member of a family (trials, seeds).
    pub fn fork_indexed(&self, name: &str, index: u64) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.set_stream(fnv1a(name.as_bytes()).wrapping_add(index));
        rng
    }

    /// Child seed, for APIs that take a plain `u64`.
    pub fn child_seed(&self, name: &str, index: u64) -> u64 {
        splitmix(self.seed ^ fnv1a(name.as_bytes()) ^ splitmix(index))
    }
}

/// Generator for a plain seed with no stream name.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
