//! Seeded, counter-addressed randomness for constraint realizations.
//!
//! Each round `t` gets its own ChaCha8 stream keyed by `(seed, t)`, so the
//! realization drawn at round `t` depends only on the seed and `t`, not on
//! how many variates earlier rounds consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed to [`ConstraintOracle::sample`](crate::ConstraintOracle::sample).
pub type OmegaRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmegaStream {
    seed: u64,
}

impl OmegaStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for round `t` (1-based).
    pub fn round_rng(&self, t: usize) -> OmegaRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        rng
    }
}

/// One realization omega(t). Its meaning is up to the constraint oracle that
/// produced it (a uniform perturbation, a Poisson arrival count, ...).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Realization(pub Vec<f64>);

impl Realization {
    pub fn empty() -> Self {
        Realization(Vec::new())
    }

    pub fn scalar(value: f64) -> Self {
        Realization(vec![value])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// First component, or 0 for an empty realization.
    pub fn first(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }
}
