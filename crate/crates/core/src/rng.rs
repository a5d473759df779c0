//! Counter-based random streams.
//!
//! A [`Stream`] is a SplitMix64 sequence whose `k`-th output can be computed
//! directly from its key, so any draw (for example the uniform assigned to a
//! particular node pair) is available without generating the ones before it.
//! Keys are derived from `(seed, purpose, index)`, so replications own
//! disjoint substreams and results do not depend on scheduling.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Stafford's variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a substream is used for; keeps differently-purposed streams apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Graph,
    Replication,
    SweepRow,
}

impl Purpose {
    fn salt(self) -> u64 {
        match self {
            Purpose::Graph => 0x6772_6170_6800_0001,
            Purpose::Replication => 0x7265_706c_6963_0002,
            Purpose::SweepRow => 0x7377_6565_7000_0003,
        }
    }
}

/// Derive a child seed from a parent seed, a purpose and an index.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    let parent = mix64(seed ^ purpose.salt());
    mix64(parent ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed) }
    }

    pub fn substream(&self, purpose: Purpose, index: u64) -> Self {
        Self::new(derive_seed(self.key, purpose, index))
    }

    /// The `k`-th 64-bit output.
    #[inline]
    pub fn u64_at(&self, k: u64) -> u64 {
        mix64(self.key.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// The `k`-th uniform, on the open interval (0, 1).
    #[inline]
    pub fn uniform_at(&self, k: u64) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.u64_at(k) >> 11) as f64 + 0.5) * SCALE
    }

    /// The `k`-th Bernoulli(`p`) draw.
    #[inline]
    pub fn bernoulli_at(&self, k: u64, p: f64) -> bool {
        self.uniform_at(k) < p
    }
}
