//! Counter-based random streams.
//!
//! A draw is a pure function of a 64-bit stream key and a 64-bit counter, so
//! any edge weight can be recomputed in any order, by any thread, without
//! shared state. Stream keys are derived from a [`SeedSpec`]: the master
//! seed, the replica index and a purpose tag that separates experiment
//! streams from each other.

use core::fmt;

/// Seed provenance of every random quantity in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master: u64,
    pub replica: u64,
    pub tag: &'static str,
}

impl SeedSpec {
    pub const fn new(master: u64, tag: &'static str) -> Self {
        SeedSpec { master, replica: 0, tag }
    }

    pub const fn with_replica(self, replica: u64) -> Self {
        SeedSpec { replica, ..self }
    }

    pub const fn with_tag(self, tag: &'static str) -> Self {
        SeedSpec { tag, ..self }
    }

    /// Stream key for this `(master, replica, tag)` triple.
    pub fn key(&self) -> StreamKey {
        let tagged = mix64(self.master ^ mix64(fnv1a64(self.tag.as_bytes())));
        StreamKey(mix64(tagged.wrapping_add(mix64(self.replica ^ 0x2545_f491_4f6c_dd1d))))
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}#{}", self.master, self.tag, self.replica)
    }
}

/// Key of one counter-based stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(pub u64);

impl StreamKey {
    /// Child stream, e.g. the `i`-th rejection attempt of a replica.
    #[inline]
    pub fn child(self, index: u64) -> StreamKey {
        StreamKey(mix64(self.0 ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    /// 64 random bits at position `counter`.
    #[inline]
    pub fn bits(self, counter: u64) -> u64 {
        mix64(self.0.wrapping_add(mix64(counter ^ 0xd6e8_feb8_6659_fd93)))
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(self, counter: u64) -> f64 {
        to_unit(self.bits(counter))
    }

    pub fn stream(self) -> Stream {
        Stream { key: self, counter: 0 }
    }
}

/// Sequential view of a counter-based stream.
#[derive(Clone, Debug)]
pub struct Stream {
    key: StreamKey,
    counter: u64,
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = self.key.bits(self.counter);
        self.counter += 1;
        out
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform integer in `0..bound` (bound > 0), by rejection.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let r = self.next_u64();
            if r < zone {
                return r % bound;
            }
        }
    }
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (bits >> 11) as f64 * SCALE
}

/// Stafford's variant 13 of the splitmix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
