//! Seeded, splittable random streams.
//!
//! Every Monte Carlo draw comes from a ChaCha8 generator keyed by the master
//! seed, with the stream id derived from a path such as `[cell, replication]`.
//! ChaCha is counter based, so disjoint stream ids give independent
//! substreams and a replication can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for the substream identified by `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(path));
    rng
}

/// Generator seeded directly from `seed` (stream 0).
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_id(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x5EED_u64, |acc, &p| splitmix(acc ^ splitmix(p)))
}
