//! Reproducible random streams.
//!
//! Every draw sequence is addressed by a [`StreamKey`]: a 64-bit seed plus a
//! stream index. Keys form a tree through [`StreamKey::child`], so a Monte
//! Carlo experiment can hand trial `t`, replicate `r` its own key without any
//! shared generator. The same key always yields the same sequence, whatever
//! the thread count or execution order.
//!
//! Keys map onto ChaCha8 with the seed as key material and the index as the
//! ChaCha stream id, so the generator itself is counter-based.

#[cfg(any(test, feature = "test-hooks"))]
use alloc::vec::Vec;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mechanism::laplace_inverse_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub index: u64,
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamKey {
    pub const fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Root key of an experiment.
    pub const fn root(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Derives the key of sub-stream `i`. Distinct `(self, i)` pairs give
    /// distinct keys with overwhelming probability.
    pub const fn child(self, i: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.index ^ 0x6a09_e667_f3bc_c909)),
            index: i,
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }

    pub fn stream(self, mode: NoiseMode) -> NoiseStream {
        NoiseStream {
            rng: self.rng(),
            mode,
        }
    }
}

/// How [`NoiseStream`] produces Laplace noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum NoiseMode {
    #[default]
    Laplace,
    /// Every Laplace draw is exactly zero. Test builds only.
    #[cfg(any(test, feature = "test-hooks"))]
    Zero,
}

mod sealed {
    pub trait Sealed {}
}

/// A source of additive Laplace noise for the private statistics.
///
/// Sealed: the only implementations are [`NoiseStream`] and, in test builds,
/// `ScriptedNoise`.
pub trait NoiseSource: sealed::Sealed {
    /// One draw from the zero-centred Laplace law with scale `scale > 0`.
    fn laplace(&mut self, scale: f64) -> f64;
}

/// A keyed generator used both for Laplace noise and for simulated data.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    mode: NoiseMode,
}

impl NoiseStream {
    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl sealed::Sealed for NoiseStream {}

impl NoiseSource for NoiseStream {
    #[inline]
    fn laplace(&mut self, scale: f64) -> f64 {
        debug_assert!(scale > 0.0);
        match self.mode {
            NoiseMode::Laplace => {
                let u = self.open01() - 0.5;
                laplace_inverse_cdf(u, scale)
            }
            #[cfg(any(test, feature = "test-hooks"))]
            NoiseMode::Zero => 0.0,
        }
    }
}

/// Replays fixed noise values in order and records the scales requested.
#[cfg(any(test, feature = "test-hooks"))]
#[derive(Debug, Clone, Default)]
pub struct ScriptedNoise {
    draws: Vec<f64>,
    scales: Vec<f64>,
}

#[cfg(any(test, feature = "test-hooks"))]
impl ScriptedNoise {
    pub fn new(draws: impl Into<Vec<f64>>) -> Self {
        Self {
            draws: draws.into(),
            scales: Vec::new(),
        }
    }

    /// Scales passed to each draw so far.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn used(&self) -> usize {
        self.scales.len()
    }
}

#[cfg(any(test, feature = "test-hooks"))]
impl sealed::Sealed for ScriptedNoise {}

#[cfg(any(test, feature = "test-hooks"))]
impl NoiseSource for ScriptedNoise {
    fn laplace(&mut self, scale: f64) -> f64 {
        let i = self.scales.len();
        self.scales.push(scale);
        *self.draws.get(i).expect("scripted noise exhausted")
    }
}
