//! Deterministic seed fan-out.
//!
//! A run has exactly one master seed. Every random draw in the pipeline comes
//! from a ChaCha stream whose seed is derived from `(master, stream tag,
//! indices...)` with SplitMix64 mixing, so results never depend on
//! evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags separating the independent random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    RadarNoise = 1,
    RadarGating = 2,
    Clutter = 3,
    Camera = 4,
    TargetPoints = 5,
    Sweep = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(stream as u64));
    for &p in path {
        h = splitmix64(h ^ p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    h
}

pub fn rng_for(master: u64, stream: Stream, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, path))
}
