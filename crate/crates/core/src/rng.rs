//! Reproducible random streams.
//!
//! Every Monte Carlo draw `i` of an experiment gets its own ChaCha8 stream,
//! keyed by `(seed, tag)` and selected with `set_stream(i)`. Draws therefore
//! never depend on how work is split across threads, and results are
//! collected in draw order before any reduction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chaos::GaussianSample;

/// FNV-1a; stable across platforms and compiler versions.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Generator for draw `index` of the experiment named `tag`.
pub fn stream_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(tag.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&(tag.len() as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Standard normal sample of length `dim` for draw `index`.
pub fn gaussian_sample(seed: u64, tag: &str, index: u64, dim: usize) -> GaussianSample {
    GaussianSample::draw(dim, &mut stream_rng(seed, tag, index))
}

/// Evaluates `f` on draws `0..n` in parallel and returns the values in draw
/// order.
pub fn par_draws<F>(seed: u64, tag: &str, n: usize, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(seed, tag, i)))
        .collect()
}
