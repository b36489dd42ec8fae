//! Seeded sampling used by the generators.
//!
//! The stream is xoshiro256++ seeded through SplitMix64 (as in
//! `rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`). Uniforms take the top
//! 53 bits of a draw, `u = (x >> 11) · 2⁻⁵³ ∈ [0, 1)`, and normals use the
//! Box–Muller cosine branch `√(−2 ln(1 − u₁)) · cos(2π u₂)`, one normal per
//! two uniforms. Any implementation of those three rules reproduces every
//! generated instance bit for bit.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// An independent stream: the generator advanced by 2¹²⁸ draws.
    pub fn split(mut self) -> Self {
        self.0.jump();
        self
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `true` with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}
