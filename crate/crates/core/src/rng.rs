//! Counter-style random streams and low-discrepancy points.
//!
//! A stream is addressed by (seed, path, step): the ChaCha key comes from
//! (seed, path) and the ChaCha stream id is the step, so any worker can
//! regenerate any step without touching the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, path: u64, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = splitmix64(seed) ^ splitmix64(path.wrapping_add(0x5851_f42d_4c95_7f2d));
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(step);
    rng
}

/// Identifies the stream that produced a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub path: u64,
    pub step: u64,
}

impl StreamId {
    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, self.path, self.step)
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point number `i` (skipping the origin) in [0,1)^dim.
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton dimension too large");
    (0..dim).map(|j| radical_inverse(i + 1, PRIMES[j])).collect()
}
