//! Per-path random streams.
//!
//! Path `k` of a run seeded with `s` always draws from ChaCha8 stream `k`
//! keyed by `s`, so batch results do not depend on how paths are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal draws for one path; the antithetic twin of a path reads
/// the same stream with the sign flipped.
pub struct NormalStream {
    rng: ChaCha8Rng,
    sign: f64,
}

impl NormalStream {
    /// Stream for `path`. With `antithetic`, paths `2m` and `2m + 1` share
    /// stream `m` and differ in sign.
    pub fn for_path(seed: u64, path: usize, antithetic: bool) -> Self {
        if antithetic {
            let sign = if path.is_multiple_of(2) { 1.0 } else { -1.0 };
            Self {
                rng: stream(seed, (path / 2) as u64),
                sign,
            }
        } else {
            Self {
                rng: stream(seed, path as u64),
                sign: 1.0,
            }
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.next();
        }
    }
}
