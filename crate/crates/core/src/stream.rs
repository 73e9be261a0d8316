//! Deterministic, splittable random streams.
//!
//! Every random draw in the workspace flows from the configured `rng_seed`
//! through [`Streams`], which hands out independent ChaCha streams keyed by a
//! `(domain, index)` pair. The pair is folded into ChaCha's 64-bit stream
//! counter, so distinct keys can never overlap, modules can draw concurrently
//! without coordinating, and a `(seed, config)` pair always reproduces the
//! same bytes regardless of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Functional areas that own a private slice of the randomness budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Monte-Carlo channel realizations for experiment cells.
    Channel = 1,
    /// Greedy restarts and channel draws inside action-space reduction.
    Baseline = 2,
    /// Q-network weight initialization.
    NetInit = 3,
    /// Epsilon-greedy exploration and replay sampling.
    Policy = 4,
    /// Environment-internal draws: channel resampling and precoder draws.
    EnvChannel = 5,
    /// Held-out evaluation channels and rollout plumbing.
    Eval = 6,
    /// Small-instance oracle comparisons.
    Oracle = 7,
}

/// Root of the randomness tree for one run.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Returns the generator for `(domain, index)`.
    ///
    /// `index` must stay below 2^48 so it cannot collide with the domain tag
    /// packed into the top bits of ChaCha's stream counter.
    pub fn rng(&self, domain: Domain, index: u64) -> ChaCha12Rng {
        debug_assert!(index < 1 << 48, "stream index {index} exceeds 2^48");
        let mut rng = ChaCha12Rng::from_seed(expand_seed(self.seed));
        rng.set_stream(((domain as u64) << 48) | (index & ((1 << 48) - 1)));
        rng
    }
}

/// Packs two 32-bit coordinates (e.g. an L-slot and a channel index) into one
/// stream index.
pub fn cell_index(slot: u32, item: u32) -> u64 {
    ((slot as u64) << 32) | item as u64
}

/// SplitMix64 expansion of the 64-bit seed into ChaCha's 256-bit key.
fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    out
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
