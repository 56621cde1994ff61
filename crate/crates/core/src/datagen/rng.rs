//! Seeded, indexed random streams.
//!
//! Every dataset draws from ChaCha8 keyed by the dataset seed. Instance `k`
//! uses stream `k`; dataset-level draws use the reserved streams below. Any
//! instance can therefore be regenerated on its own, in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream for the hidden ground-truth model (the Bernoulli matrices).
pub const STREAM_TRUE_MODEL: u64 = u64::MAX;
/// Stream for dataset-wide fixed parameters.
pub const STREAM_FIXED: u64 = u64::MAX - 1;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn bernoulli_half(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        0.0
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform on the open interval (0, 1).
pub fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gumbel(location, scale) by inverse CDF: `mu - beta * ln(-ln U)`.
pub fn gumbel(rng: &mut ChaCha8Rng, location: f64, scale: f64) -> f64 {
    location - scale * (-open_unit(rng).ln()).ln()
}
