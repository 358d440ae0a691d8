//! Deterministic seed derivation.
//!
//! A run has one master seed. Every simulation cell (one phase point, one
//! protocol slot, one set or replica) gets its own sub-seed from a
//! SplitMix64 mix of the master seed and the cell coordinates. Within a
//! cell, each source of randomness draws from its own ChaCha8 stream of that
//! sub-seed, so changing how often one role draws (e.g. switching every
//! photon vs. every ten photons) never shifts the deviates seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Slot used for EBCM prediction replicas in the alpha scan.
pub const SLOT_PREDICTION: u32 = 1_000;
/// Slot used for QM-simulated reference data.
pub const SLOT_REFERENCE: u32 = 2_000;
/// Slot used for the run-level burn-in of a persistent device.
pub const SLOT_BURN_IN: u32 = 3_000;
/// Slot used for fixed-phase runs.
pub const SLOT_STATIC: u32 = 4_000;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One SplitMix64 output step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` one word at a time.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Coordinates of a simulation cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellKey {
    pub phi0: f64,
    pub slot: u32,
    pub index: u32,
}

impl CellKey {
    pub fn new(phi0: f64, slot: u32, index: u32) -> Self {
        Self { phi0, slot, index }
    }

    pub fn sub_seed(&self, master: u64) -> u64 {
        // -0.0 and 0.0 name the same phase point
        let phi = if self.phi0 == 0.0 { 0.0f64 } else { self.phi0 };
        derive_seed(
            master,
            &[phi.to_bits(), u64::from(self.slot), u64::from(self.index)],
        )
    }
}

/// Independent randomness roles inside one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Switch = 0,
    Routing = 1,
    Background = 2,
    Detector = 3,
    BurnIn = 4,
}

pub fn stream(sub_seed: u64, role: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
    rng.set_stream(role as u64);
    rng
}

/// The full set of per-role generators for one cell.
#[derive(Clone, Debug)]
pub struct CellStreams {
    pub switch: ChaCha8Rng,
    pub routing: ChaCha8Rng,
    pub background: ChaCha8Rng,
    pub detector: ChaCha8Rng,
}

impl CellStreams {
    pub fn new(sub_seed: u64) -> Self {
        Self {
            switch: stream(sub_seed, Stream::Switch),
            routing: stream(sub_seed, Stream::Routing),
            background: stream(sub_seed, Stream::Background),
            detector: stream(sub_seed, Stream::Detector),
        }
    }
}
