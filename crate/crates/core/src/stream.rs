//! Deterministic random substreams.
//!
//! Every snapshot index owns a family of ChaCha8 streams keyed by the master
//! seed, so results never depend on which worker evaluated which snapshot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Each purpose gets its own stream so adding a
/// decision rule never perturbs the channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 0,
    Sap = 1,
    Cascaded = 2,
    Map = 3,
}

const PURPOSES: u64 = 4;

pub fn substream(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index * PURPOSES + purpose as u64);
    rng
}
