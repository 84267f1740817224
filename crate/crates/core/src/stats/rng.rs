//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream)`; the
//! position inside a stream is a plain word counter, so any draw can be
//! located without replaying its predecessors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream-key domains, so that e.g. Brownian increments and exact CIR draws
/// of the same path never share keystream.
pub mod domain {
    pub const NOISE: u64 = 0x6272_6f77_6e69_616e;
    pub const EXACT_CIR: u64 = 0x6369_725f_6578_6163;
    pub const MH: u64 = 0x6d65_7472_6f70_6f6c;
    pub const MISC: u64 = 0x6d69_7363_0000_0001;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key for `(seed, domain)`.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    mix64(seed ^ mix64(domain))
}

/// Independent stream for `(seed, path_index)` in the default domain.
pub fn rng_streams(seed: u64, path_index: u64) -> StreamRng {
    rng_in_domain(seed, domain::MISC, path_index)
}

pub fn rng_in_domain(seed: u64, domain: u64, path_index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(path_index);
    rng
}

/// Uniform on `(0, 1]` from 53 random bits.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller pair from two raw words: fixed consumption per Gaussian,
/// which keeps stream positions a pure function of the draw index.
#[inline]
pub fn box_muller(u: u64, v: u64) -> (f64, f64) {
    let r = (-2.0 * open_unit(u).ln()).sqrt();
    let theta = std::f64::consts::TAU * open_unit(v);
    let (s, c) = theta.sin_cos();
    (r * c, r * s)
}
