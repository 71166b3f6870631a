//! Deterministic random source used by every sampler in the crate.
//!
//! The generator is PCG-XSH-RR with 64-bit state and 32-bit output. All derived
//! samplers consume a fixed number of raw draws so that a seed fully determines
//! a run on every platform:
//!
//! | sampler                 | `u64` draws |
//! |-------------------------|-------------|
//! | [`Pcg32::next_f64`]     | 1           |
//! | [`Pcg32::categorical`]  | 1           |
//! | [`Pcg32::below`]        | 1           |
//! | [`Pcg32::bernoulli`]    | 1           |
//! | [`Pcg32::geometric`]    | 1           |
//! | [`Pcg32::normal`]       | 2           |
//!
//! One `u64` draw is two consecutive 32-bit outputs, high word first.

use core::f64::consts::PI;

const MULTIPLIER: u64 = 6364136223846793005;
const DEFAULT_STREAM: u64 = 0xda3e_39cb_94b9_5bdb;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, DEFAULT_STREAM)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.step();
        rng.state = rng.state.wrapping_add(seed);
        rng.step();
        rng
    }

    /// Independent generator derived from this one's next draw; used to give
    /// sub-components (evaluation, goal sampling) their own streams.
    pub fn fork(&mut self, stream: u64) -> Self {
        let seed = self.next_u64();
        Self::with_stream(seed, stream)
    }

    fn step(&mut self) {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(self.inc);
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` by scaling a single uniform. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let idx = (self.next_f64() * n as f64) as usize;
        idx.min(n - 1)
    }

    /// Inverse-CDF draw from a probability vector. Rounding slack at the top
    /// end falls on the last index with positive mass.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
            }
            acc += p;
            if u < acc {
                return i;
            }
        }
        last_positive
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Geometric draw with pmf `(1 - ratio) * ratio^k`, `k >= 0`.
    pub fn geometric(&mut self, ratio: f64) -> usize {
        let u = 1.0 - self.next_f64();
        if ratio <= 0.0 {
            return 0;
        }
        let k = libm::floor(libm::log(u) / libm::log(ratio));
        if k >= usize::MAX as f64 {
            usize::MAX
        } else {
            k as usize
        }
    }

    /// Standard normal via the cosine branch of Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
    }

    /// Uniform point on the probability simplex of dimension `k`
    /// (normalized exponential variates, `k` draws).
    pub fn dirichlet_uniform(&mut self, k: usize) -> alloc::vec::Vec<f64> {
        let mut w: alloc::vec::Vec<f64> = (0..k).map(|_| -libm::log(1.0 - self.next_f64())).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        } else {
            w.iter_mut().for_each(|x| *x = 1.0 / k as f64);
        }
        w
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher–Yates, `k` draws).
    pub fn choose_distinct(&mut self, n: usize, k: usize) -> alloc::vec::Vec<usize> {
        let mut pool: alloc::vec::Vec<usize> = (0..n).collect();
        for i in 0..k.min(n) {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k.min(n));
        pool
    }
}
