//! Deterministic random streams.
//!
//! Every run is driven by a 64-bit seed. Independent streams are derived by
//! seeding ChaCha8 with the seed and selecting the ChaCha stream `stream_id`,
//! so trial `t` of an experiment is reproducible regardless of scheduling.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// The generator for stream `stream_id` under `seed`.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Oracle and algorithm generators for trial `trial`. The oracle uses stream
/// `2·trial`, the algorithm's own coins use stream `2·trial + 1`.
pub fn trial_streams(seed: u64, trial: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    (stream(seed, 2 * trial), stream(seed, 2 * trial + 1))
}
