//! Deterministic random streams.
//!
//! Every trial owns a ChaCha8 stream. The 256-bit key is expanded from the
//! master seed; the 64-bit stream id mixes an experiment identifier with the
//! trial index. Streams are therefore independent of scheduling and thread
//! count, and a trial can be replayed in isolation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// FNV-1a hash of an experiment identifier.
pub fn experiment_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for `(experiment, trial)`.
pub fn stream_id(experiment: u64, trial: u64) -> u64 {
    splitmix(experiment ^ splitmix(trial))
}

/// Seed for trial `trial` of `experiment_id` under `master_seed`.
pub fn derive_seed(master_seed: u64, experiment_id: &str, trial: u64) -> u64 {
    splitmix(master_seed ^ stream_id(experiment_hash(experiment_id), trial))
}

#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    /// Stream 0 under `seed`.
    pub fn from_seed(seed: u64) -> Self {
        TrialRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream for one trial of one experiment.
    pub fn for_trial(master_seed: u64, experiment_id: &str, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id(experiment_hash(experiment_id), trial));
        TrialRng(rng)
    }
}

impl RngCore for TrialRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
