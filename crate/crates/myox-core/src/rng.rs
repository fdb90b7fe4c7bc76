//! Deterministic, splittable random source.
//!
//! The generator is SplitMix64 (Steele, Lea, Flood 2014): the state advances
//! by the golden-gamma constant and each output is the Stafford "mix13"
//! finalizer of the new state. It is fixed here so that every pipeline run
//! is reproducible bit-for-bit across platforms; system randomness is never
//! consulted. All arithmetic is on `u64` values, so the stream does not
//! depend on endianness.
//!
//! Child generators are derived with [`Rng::split`]:
//! `child_seed = mix13(parent_seed + mix13(tag + GAMMA) + GAMMA)`. Splitting
//! depends only on the parent's seed (not on how much of its stream was
//! consumed), so `split` with the same tag always yields the same child.
//! The pipeline derives `fold` generators from the run seed with the fold
//! index as tag, and `epoch` generators from the fold seed with the epoch
//! as tag.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stafford variant 13 of the 64-bit finalizer used by SplitMix64.
#[inline]
fn mix13(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream with a remembered seed for splitting.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, state: seed }
    }

    /// The seed this generator was constructed with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deterministic child generator for `tag`. Children for different tags
    /// are statistically independent streams; the derivation uses only the
    /// seed, never the consumed state.
    pub fn split(&self, tag: u64) -> Rng {
        let child = mix13(
            self.seed
                .wrapping_add(mix13(tag.wrapping_add(GAMMA)))
                .wrapping_add(GAMMA),
        );
        Rng::new(child)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix13(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, 1) with 24 random bits.
    pub fn next_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }

    /// Uniform integer in [0, n). Fixed-point multiply keeps the mapping
    /// platform-independent. `n` must be nonzero.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal draw via the Box-Muller transform. One uniform pair
    /// per draw; the sine branch is discarded to keep the stream layout
    /// independent of call parity.
    pub fn normal(&mut self) -> f64 {
        use crate::fmath as fm;
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        fm::sqrt(-2.0 * fm::ln(u1)) * fm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Fisher-Yates shuffle, high-to-low, using `next_below`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}
