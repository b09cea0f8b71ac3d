//! Deterministic random substreams.
//!
//! Every random draw in the simulator comes from a fresh `ChaCha8Rng` whose
//! seed is derived from `(master seed, purpose tag, index, tick)`. No RNG
//! state is shared or carried between ticks, so a snapshot only needs the
//! tick counter to reproduce every future draw.
//!
//! The derivation folds each component into a SplitMix64 state:
//!
//! ```text
//! h = mix(seed ^ GOLDEN)
//! h = mix(h ^ tag); h = mix(h ^ index); h = mix(h ^ tick)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose tags for substreams. Values are part of the reproducibility
/// contract and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    SubstrateInit = 1,
    AgentInit = 2,
    CodebookInit = 3,
    CodebookReseed = 4,
    LangevinNoise = 5,
    Intervention = 6,
    Test = 99,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit seed of the substream `(seed, purpose, index, tick)`.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64, tick: u64) -> u64 {
    let mut h = mix(seed ^ GOLDEN);
    h = mix(h ^ purpose as u64);
    h = mix(h ^ index);
    mix(h ^ tick)
}

pub fn substream(seed: u64, purpose: Purpose, index: u64, tick: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, index, tick))
}
