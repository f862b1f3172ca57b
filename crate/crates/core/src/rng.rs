//! Deterministic random substreams.
//!
//! Every stochastic draw in the simulator comes from a ChaCha stream keyed by
//! the scenario seed plus a short tag path, so results never depend on
//! evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const SCENE: u64 = 1;
    pub const MOBILITY: u64 = 2;
    pub const HOTSPOT: u64 = 3;
    pub const LATENT: u64 = 4;
    pub const TRAINING: u64 = 5;
    pub const OWN_USERS: u64 = 6;
    pub const START: u64 = 7;
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream from a seed and a tag path.
pub fn substream(seed: u64, tags: &[u64]) -> SimRng {
    let mut h = splitmix(seed);
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    SimRng::seed_from_u64(h)
}
