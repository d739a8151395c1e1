//! Deterministic replica-indexed random streams.
//!
//! Every Monte Carlo replica in this crate draws from a counter-based stream
//! keyed by `(seed, replica)`. Distinct pairs give statistically independent
//! streams; identical pairs reproduce the same draws bit-for-bit on every
//! platform, because the state evolution is pure integer arithmetic
//! (ChaCha8). Floating-point enters only when integers are mapped to
//! variates, so Gaussian draws agree across platforms up to libm rounding.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct RngStream {
    rng: ChaCha8Rng,
    gauss_spare: Option<f64>,
    sign_bits: u64,
    sign_left: u32,
}

impl RngStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        RngStream {
            rng,
            gauss_spare: None,
            sign_bits: 0,
            sign_left: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; the second variate of each pair is
    /// cached so consecutive calls consume one uniform pair per two draws.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        // 1 - u in (0, 1] keeps the logarithm finite.
        let r = (-2.0 * (1.0 - self.uniform()).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        self.gauss_spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Random sign in {-1, +1}, one bit per draw (64 buffered per word).
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.sign_left == 0 {
            self.sign_bits = self.next_u64();
            self.sign_left = 64;
        }
        let bit = self.sign_bits & 1;
        self.sign_bits >>= 1;
        self.sign_left -= 1;
        if bit == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform on [-sqrt(3), sqrt(3)]: mean zero, unit variance, bounded.
    #[inline]
    pub fn uniform_subgaussian(&mut self) -> f64 {
        let s3 = 3.0_f64.sqrt();
        (2.0 * self.uniform() - 1.0) * s3
    }

    /// Uniform integer in [0, n) without modulo bias.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Cumulative table for categorical sampling from a probability vector.
/// Zero-probability atoms occupy zero-width intervals and are never drawn.
pub struct CategoricalTable {
    cum: Vec<f64>,
}

impl CategoricalTable {
    pub fn new(probs: &[f64]) -> Self {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cum.push(acc);
        }
        CategoricalTable { cum }
    }

    pub fn sample(&self, stream: &mut RngStream) -> usize {
        let u = stream.uniform() * self.cum.last().copied().unwrap_or(1.0);
        let mut idx = self.cum.partition_point(|&c| c <= u);
        if idx >= self.cum.len() {
            // u landed at or past the final cumulative value (roundoff);
            // fall back to the last positive-width interval.
            idx = self.cum.len() - 1;
            while idx > 0 && self.cum[idx] == self.cum[idx - 1] {
                idx -= 1;
            }
        }
        idx
    }
}
