#![allow(dead_code)]

use scld::experiment::{Experiment, ExperimentConfig, OneOrMany};
use scld::pipeline::DecodeResult;
use scld::tree_code::Payload;

/// Four slots of 16 channel uses, 6-bit sub-blocks and 2 parity bits per
/// slot after the first; 18-bit payloads.
pub fn micro_config(seed: u64, active_users: usize, antennas: usize) -> ExperimentConfig {
    ExperimentConfig {
        payload_bits: 18,
        slots: 4,
        n: 16,
        antennas: OneOrMany::One(antennas),
        active_users: OneOrMany::One(active_users),
        ebn0_db: 10.0,
        subblock_bits: 6,
        parity_profile: vec![0, 2, 2, 2],
        trials: 1,
        seed,
        ..ExperimentConfig::default()
    }
}

pub fn micro(seed: u64, active_users: usize, antennas: usize) -> Experiment {
    Experiment::new(micro_config(seed, active_users, antennas)).unwrap()
}

/// True sub-block index of every user at every slot.
pub fn true_indices(exp: &Experiment, payloads: &[Payload]) -> Vec<Vec<u64>> {
    payloads
        .iter()
        .map(|w| scld::tree_code::encode_outer(w, &exp.generators, &exp.profile).unwrap().subblocks)
        .collect()
}

/// Selected index set per slot.
pub fn selected(res: &DecodeResult) -> Vec<Vec<usize>> {
    res.selections.iter().map(|s| s.iter().map(|f| f.index).collect()).collect()
}
