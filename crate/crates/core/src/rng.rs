//! Counter-based seed splitting.
//!
//! Every random draw in a run is addressed by `(stream, a, b, c)` and derived
//! from the run seed alone, so adding firms or countries never shifts the
//! draws of existing ones, and draws can be made in any order or on any
//! thread.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

/// Independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    FirmCost = 1,
    LocalShock = 2,
    RemoteShock = 3,
    InitialShock = 4,
    World = 5,
    Test = 6,
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { root: seed }
    }

    pub fn seed(&self) -> u64 {
        self.root
    }

    /// 64-bit key for one address.
    pub fn key(&self, stream: Stream, a: u64, b: u64, c: u64) -> u64 {
        let mut h = splitmix64(self.root ^ 0xA076_1D64_78BD_642F);
        for word in [stream as u64, a, b, c] {
            h = splitmix64(h ^ word);
        }
        h
    }

    pub fn rng(&self, stream: Stream, a: u64, b: u64, c: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key(stream, a, b, c))
    }

    /// Standard normal draw at an address.
    pub fn normal(&self, stream: Stream, a: u64, b: u64, c: u64) -> f64 {
        let mut rng = self.rng(stream, a, b, c);
        StandardNormal.sample(&mut rng)
    }

    /// Uniform draw on `[0, 1)` at an address.
    pub fn uniform(&self, stream: Stream, a: u64, b: u64, c: u64) -> f64 {
        let mut rng = self.rng(stream, a, b, c);
        StandardUniform.sample(&mut rng)
    }
}
