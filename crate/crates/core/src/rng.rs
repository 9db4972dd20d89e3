//! Counter-based random substreams.
//!
//! Every simulated unit of work (a molecule, a link replication, a sweep
//! point) draws from its own ChaCha8 stream keyed by the experiment seed and a
//! domain tag, with the stream id carrying the unit's coordinates. Results are
//! therefore independent of how rayon schedules the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep substreams of different subsystems disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Molecule = 1,
    Link = 2,
    Calibration = 3,
    Bits = 4,
    Demo = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, domain, lane, index)`; `lane` is typically a
/// replication or source index and `index` a molecule or sweep-point index.
pub fn substream(seed: u64, domain: Domain, lane: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ (domain as u64) << 56),
        splitmix64(lane.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ domain as u64),
        (domain as u64) << 56 | 0x006d_6f6c_6d69_6d6f,
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
