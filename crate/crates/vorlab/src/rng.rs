//! Counter-based random streams for reproducible parallel sampling.
//!
//! Every draw is a pure function of `(seed, stream, step, counter)`, so
//! trajectories are bitwise reproducible at any thread count: a particle's
//! noise depends only on its index and the step number, never on scheduling.

use std::f64::consts::PI;

/// splitmix64 finalizer: a 64-bit bijective mixer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Keyed counter RNG: draws are indexed, not sequential state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    /// Stream keyed by `(seed, stream_id)`; typically one stream per particle.
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix(seed ^ mix(stream)),
        }
    }

    #[inline]
    fn word(&self, step: u64, counter: u64) -> u64 {
        mix(self.key ^ mix(step.wrapping_mul(0xd1342543de82ef95) ^ counter))
    }

    /// Uniform draw in (0, 1], indexed by `(step, counter)`.
    #[inline]
    pub fn uniform(&self, step: u64, counter: u64) -> f64 {
        // 53 high bits; +1 keeps the value strictly positive for log().
        (((self.word(step, counter) >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Pair of independent standard normals via Box-Muller.
    #[inline]
    pub fn normal_pair(&self, step: u64, counter: u64) -> (f64, f64) {
        let u1 = self.uniform(step, 2 * counter);
        let u2 = self.uniform(step, 2 * counter + 1);
        let mag = (-2.0 * u1.ln()).sqrt();
        let phase = 2.0 * PI * u2;
        (mag * phase.cos(), mag * phase.sin())
    }
}
