//! Deterministic random substreams.
//!
//! Every experiment has one master seed. Each trial and each purpose within a
//! trial gets its own ChaCha stream, so trials can run in any order (or in
//! parallel) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a substream is used for. The discriminant is folded into the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Clusters = 1,
    Sub6Rays = 2,
    MmwaveRays = 3,
    Sub6Noise = 4,
    Probe = 5,
    RandomCodebook = 6,
    StructuredCodebook = 7,
    MeasurementNoise = 8,
    ExhaustiveNoise = 9,
    Validation = 10,
}

/// Substream for `(trial, purpose, slot)`. `slot` separates repeated uses of
/// the same purpose inside a trial, e.g. one codebook per measurement size.
pub fn substream(master: u64, trial: u64, purpose: Purpose, slot: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let stream = (trial << 24) | ((purpose as u64) << 16) | u64::from(slot & 0xffff);
    rng.set_stream(stream);
    rng
}

/// A standalone seeded generator for tests and one-off draws.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
