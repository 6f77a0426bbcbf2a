//! Seeded substreams.
//!
//! Every random draw in a simulation is taken from a ChaCha8 stream keyed by
//! the experiment seed, with the stream id derived from `(trial, node, role)`.
//! Trials can therefore run in any order, on any number of threads, and still
//! reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    Inputs = 1,
    Channel = 2,
    Beamformer = 3,
    Noise = 4,
    Rounding = 5,
    Function = 6,
    Baseline = 7,
}

/// Node index used for draws shared by all nodes (e.g. a common channel component).
pub const SHARED_NODE: u64 = u64::MAX;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_id(trial: u64, node: u64, role: Role) -> u64 {
    splitmix(splitmix(splitmix(trial) ^ node) ^ role as u64)
}

pub fn substream(seed: u64, trial: u64, node: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(trial, node, role));
    rng
}

/// Seed for node `k`'s beamformer generator, shareable with the receiver.
pub fn beamformer_seed(seed: u64, trial: u64, node: u64) -> u64 {
    splitmix(seed ^ stream_id(trial, node, Role::Beamformer))
}
