//! Seeded random streams. Every consumer derives its own stream from a base
//! seed so modules can be exercised in isolation without shifting each
//! other's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const CAMPAIGN_STREAM: u64 = 0;
pub const VOLUME_STREAM: u64 = 1;
pub const DYNAMICS_STREAM: u64 = 2;
pub const HORIZON_STREAM: u64 = 3;
pub const TARGET_STREAM: u64 = 4;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
