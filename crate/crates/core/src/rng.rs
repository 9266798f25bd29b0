//! Deterministic, platform-independent randomness.
//!
//! Everything that must be regenerable from a seed (worlds, questions, suites,
//! built-in agents) draws from [`SplitMix64`]. The algorithm is fixed here so
//! that any implementation in any language can reproduce a world bit-exactly:
//!
//! ```text
//! state <- state + 0x9e3779b97f4a7c15          (wrapping)
//! z     <- state
//! z     <- (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z     <- (z ^ (z >> 27)) * 0x94d049bb133111eb
//! out   <- z ^ (z >> 31)
//! ```
//!
//! Bounded integers use rejection sampling on the full 64-bit output, floats
//! use the top 53 bits. Seeds for sub-streams come from [`derive_seed`].

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 output finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives the seed of the `index`-th member of the stream named `tag` under `parent`.
///
/// `seed = mix64(mix64(parent ^ fnv1a64(tag)) + index * 0x9e3779b97f4a7c15)`.
/// For a fixed `(parent, tag)` this is injective in `index`, so counter-based
/// streams never repeat.
pub fn derive_seed(parent: u64, tag: &str, index: u64) -> u64 {
    let base = mix64(parent ^ fnv1a64(tag.as_bytes()));
    mix64(base.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// A child generator for the named sub-stream; does not advance `self`.
    pub fn fork(&self, tag: &str) -> Self {
        Self::new(derive_seed(self.state, tag, 0))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // Largest multiple of n that fits; values at or above it are rejected.
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        if lo == 0 && hi == u64::MAX {
            return self.next_u64();
        }
        lo + self.below(hi - lo + 1)
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.index(items.len())])
        }
    }

    /// Fisher-Yates, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Index drawn proportionally to `weights`. Panics on an empty or all-zero slice.
    pub fn weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "weights must have positive mass");
        let mut target = self.unit() * total;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                return i;
            }
            target -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}
