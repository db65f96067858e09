//! Counter-based seeded randomness.
//!
//! Every random quantity in the crate is addressed as `(stream key, counter)`,
//! where the key is derived from `(seed, component tag, index)`. Draws are
//! pure functions of their address, so generation can be reordered or
//! parallelized without changing results, and any single trial can be
//! regenerated in isolation.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Stream key for `(seed, tag, index)`.
pub fn derive_key(seed: u64, tag: &str, index: u64) -> u64 {
    let k0 = mix64(seed ^ 0x243f_6a88_85a3_08d3);
    let k1 = mix64(k0 ^ fnv1a64(tag.as_bytes()));
    mix64(k1 ^ index.wrapping_mul(GOLDEN))
}

/// A stateless stream of random words indexed by a counter.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key }
    }

    pub fn from_parts(seed: u64, tag: &str, index: u64) -> Self {
        CounterRng::new(derive_key(seed, tag, index))
    }

    /// Word at counter `c` (SplitMix64 output sequence for this key).
    pub fn word_at(&self, c: u64) -> u64 {
        mix64(self.key.wrapping_add(c.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit_at(&self, c: u64) -> f64 {
        (self.word_at(c) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, suitable for `ln`.
    fn unit_open_at(&self, c: u64) -> f64 {
        ((self.word_at(c) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on counters `2i` and `2i + 1`.
    pub fn normal_at(&self, i: u64) -> f64 {
        let u1 = self.unit_open_at(2 * i);
        let u2 = self.unit_at(2 * i + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform sign in `{-1.0, +1.0}`.
    pub fn sign_at(&self, i: u64) -> f64 {
        if self.word_at(i) >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `[0, bound)` by multiply-shift reduction.
    /// The residual bias of at most `bound / 2^64` is far below anything a
    /// statistical test at our scales can resolve.
    pub fn below_at(&self, c: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.word_at(c) as u128 * bound as u128) >> 64) as u64
    }
}

/// Sequential convenience wrapper over [`CounterRng`].
#[derive(Debug, Clone)]
pub struct StatefulRng {
    rng: CounterRng,
    counter: u64,
}

impl StatefulRng {
    pub fn new(rng: CounterRng) -> Self {
        StatefulRng { rng, counter: 0 }
    }

    pub fn from_parts(seed: u64, tag: &str, index: u64) -> Self {
        StatefulRng::new(CounterRng::from_parts(seed, tag, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = self.rng.word_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_unit(&mut self) -> f64 {
        let v = self.rng.unit_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_normal(&mut self) -> f64 {
        let v = self.rng.normal_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_sign(&mut self) -> f64 {
        let v = self.rng.sign_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_below(&mut self, bound: u64) -> u64 {
        let v = self.rng.below_at(self.counter, bound);
        self.counter += 1;
        v
    }
}

/// FNV-1a over raw bytes, exposed for config hashing.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    fnv1a64(bytes)
}
