//! Reproducible random streams keyed by `(seed, trial, entity)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// Streams used inside one trial. Keeping them distinct means changing
/// how many draws one stage consumes never perturbs another stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Entity {
    CommScene = 1,
    CommNoise = 2,
    Mixing = 3,
    ChannelNoise = 4,
    RadarComm = 5,
    TargetScene = 6,
    RadarNoise = 7,
    Interference = 8,
    Placement = 9,
    Rem = 10,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derived 64-bit seed for one `(seed, trial, entity)` triple.
pub fn derive_seed(seed: u64, trial: u64, entity: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ entity.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(seed: u64, trial: u64, entity: Entity) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, trial, entity as u64))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Circular complex Gaussian with `E|z|^2 = var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn real_gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
