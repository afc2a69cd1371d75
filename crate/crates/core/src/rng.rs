//! Named-stream deterministic randomness.
//!
//! Every random draw in the crate comes from a [`RngState`]: a 64-bit seed plus
//! a slash-separated stream name such as `augment/img_0042/3`. The stream name
//! is hashed (FNV-1a, platform independent) into the ChaCha stream id, so two
//! streams never share output and the draws of one stream do not depend on how
//! many values any other stream consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: String,
}

impl RngState {
    pub fn new(seed: u64, stream: impl Into<String>) -> Self {
        Self {
            seed,
            stream: stream.into(),
        }
    }

    /// Sub-stream `self.stream/name`.
    pub fn child(&self, name: impl std::fmt::Display) -> Self {
        Self {
            seed: self.seed,
            stream: format!("{}/{}", self.stream, name),
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(self.stream.as_bytes()));
        rng
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
