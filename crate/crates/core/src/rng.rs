//! Seeded random streams.
//!
//! Every source of randomness in a run is a ChaCha8 stream keyed by a master
//! seed, a purpose tag and up to two indices. Streams with different keys are
//! statistically independent, and a stream can be rebuilt anywhere from its
//! key alone. That is what lets the server replay an agent's coin: it knows
//! the key, not the draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. Part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Per-agent private coin, shared with the server.
    Coin = 1,
    /// Query locations drawn from an agent coin in one epoch.
    Query = 2,
    /// Server-only Bernoulli draws for the inducing set.
    Inducing = 3,
    /// Observation noise, known only to the environment.
    Noise = 4,
    /// Unknown direction of the h1/h2 objectives.
    Theta = 5,
    /// Random discretisation of high-dimensional domains.
    Grid = 6,
    /// Per-replication seeds in a Monte Carlo experiment.
    Replication = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a key into a 64-bit seed.
pub fn derive_seed(master: u64, purpose: Purpose, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(32))
}

/// Builds the stream for a key.
pub fn stream(master: u64, purpose: Purpose, a: u64, b: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, purpose, a, b))
}

pub fn seeded(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}
