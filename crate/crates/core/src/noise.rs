//! Wiener increments and reproducible per-trajectory seeding.
//!
//! Every trajectory owns an independent ChaCha8 stream whose seed is a
//! SplitMix64 hash of `(master_seed, theta_index, traj_index, stream_tag)`.
//! Streams never depend on scheduling, so ensembles are bitwise
//! reproducible for any worker count, and adding a new tag leaves existing
//! streams untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

/// Distinguishes independent random streams belonging to the same shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamTag {
    Adaptive = 1,
    Replay = 2,
    Heterodyne = 3,
    Homodyne = 4,
    Tomography = 5,
    InitialPhase = 6,
    Validation = 7,
    Bootstrap = 8,
    Diagnostic = 9,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream `(master, theta_index, traj_index, tag)`.
pub fn derive_seed(master: u64, theta_index: u64, traj_index: u64, tag: StreamTag) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ theta_index);
    h = splitmix64(h ^ traj_index.wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(h ^ (tag as u64))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source of Wiener increments `dW ~ N(0, dt)`.
pub trait NoiseSource<T> {
    fn next_dw(&mut self) -> T;
}

/// Freshly sampled Gaussian increments.
#[derive(Debug, Clone)]
pub struct GaussianNoise<T> {
    rng: ChaCha8Rng,
    sqrt_dt: T,
}

impl<T: Real> GaussianNoise<T> {
    pub fn new(seed: u64, dt: T) -> Self {
        Self { rng: rng_from_seed(seed), sqrt_dt: dt.sqrt() }
    }
}

impl<T: Real> NoiseSource<T> for GaussianNoise<T> {
    #[inline]
    fn next_dw(&mut self) -> T {
        let z: f64 = self.rng.sample(StandardNormal);
        T::lit(z) * self.sqrt_dt
    }
}

/// A stored realisation of the Wiener increments.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath<T> {
    pub seed: u64,
    pub dt: T,
    pub dw: Vec<T>,
}

impl<T: Real> NoisePath<T> {
    pub fn generate(seed: u64, n: usize, dt: T) -> Self {
        let mut src = GaussianNoise::new(seed, dt);
        let dw = (0..n).map(|_| src.next_dw()).collect();
        Self { seed, dt, dw }
    }

    /// Same Brownian path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        let dw = self
            .dw
            .chunks_exact(factor)
            .map(|c| c.iter().fold(T::zero(), |a, &b| a + b))
            .collect();
        Self { seed: self.seed, dt: self.dt * T::lit(factor as f64), dw }
    }

    pub fn source(&self) -> PathNoise<'_, T> {
        PathNoise { path: self, next: 0 }
    }
}

/// Replays a [`NoisePath`]; yields zero once exhausted.
#[derive(Debug)]
pub struct PathNoise<'a, T> {
    path: &'a NoisePath<T>,
    next: usize,
}

impl<T: Real> NoiseSource<T> for PathNoise<'_, T> {
    #[inline]
    fn next_dw(&mut self) -> T {
        let v = self.path.dw.get(self.next).copied().unwrap_or_else(T::zero);
        self.next += 1;
        v
    }
}

/// Noiseless source, for deterministic checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoNoise;

impl<T: Real> NoiseSource<T> for NoNoise {
    #[inline]
    fn next_dw(&mut self) -> T {
        T::zero()
    }
}
