//! Counter-based random streams keyed by `(seed, purpose, coordinate)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// Wiener increments on the sampling window.
    Window,
    /// Wiener increments on `[tail_start, 0)`, drawn backwards from 0.
    NearTail,
    /// Coarse cells beyond `tail_start`.
    FarTail,
    /// Exact (circulant embedding) sampler.
    Exact,
    /// Auxiliary draws made by experiments.
    Aux,
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Window => 0,
            Purpose::NearTail => 1,
            Purpose::FarTail => 2,
            Purpose::Exact => 3,
            Purpose::Aux => 4,
        }
    }
}

/// Deterministic generator for one `(seed, purpose, coordinate)` triple.
pub fn stream(seed: u64, purpose: Purpose, coordinate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.code() * (1 << 32) + coordinate as u64);
    rng
}

/// `n` standard normal draws.
pub fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}
