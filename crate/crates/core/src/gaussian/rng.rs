use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::normal::inverse_normal_cdf;

/// Words of keystream reserved for each counter value (2^36 32-bit words).
const WORDS_PER_COUNTER: u32 = 36;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a tag into a seed, giving statistically unrelated seeds for
/// different experiment stages.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(0xd605_bbb5_8c8a_bbfd);
    splitmix64(&mut s);
    splitmix64(&mut s)
}

/// A counter-based random stream keyed by `(seed, replica, counter)`.
///
/// The seed selects a ChaCha8 key, the replica selects the cipher stream, and
/// the counter selects a disjoint block of keystream. Any triple can be
/// constructed directly, so output never depends on how many numbers other
/// streams consumed or on thread scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    replica: u64,
    counter: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self::at(seed, replica, 0)
    }

    pub fn at(seed: u64, replica: u64, counter: u64) -> Self {
        assert!(counter < 1 << 32, "counter {counter} exceeds the 2^32 substream budget");
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(replica);
        inner.set_word_pos(u128::from(counter) << WORDS_PER_COUNTER);
        RngStream {
            seed,
            replica,
            counter,
            inner,
        }
    }

    /// The stream for another counter value under the same `(seed, replica)`.
    pub fn substream(&self, counter: u64) -> Self {
        Self::at(self.seed, self.replica, counter)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1), from the top 53 bits of a draw.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform_open())
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.standard_normal();
        }
    }
}
