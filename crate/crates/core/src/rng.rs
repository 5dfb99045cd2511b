//! Seeded random streams and the exact discrete samplers used by the
//! simulators.
//!
//! Every replica owns a [`ChaCha8Rng`] seeded from a 64-bit value produced by
//! [`derive_seed`]. The derivation is a chain of SplitMix64 finalizers, each a
//! bijection on `u64`, so for a fixed master seed and system size distinct
//! replica indices always map to distinct stream seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for replica `replica` of an experiment at system size `n`.
pub fn derive_seed(master_seed: u64, n: u64, replica: u64) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ n.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(h ^ replica)
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Poisson draw; a non-positive mean yields 0.
pub fn poisson<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

/// Binomial draw with the degenerate cases `p <= 0` and `p >= 1` short-circuited.
pub fn binomial<R: rand::Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p).expect("valid binomial").sample(rng)
}
