mod common;

use common::{micro, micro_config, selected, true_indices};
use scld::channel::SlotObservation;
use scld::codebook::admissible_support;
use scld::experiment::{missed, Experiment, ExperimentConfig};
use scld::linalg::CMatrix;
use scld::pipeline::{decode, decode_baseline, decode_scld, DecoderMode};

const MODES: [DecoderMode; 2] = [DecoderMode::Baseline, DecoderMode::Scld];

#[test]
fn single_user_large_m_is_recovered_by_both_modes() {
    let mut hits = [0usize; 2];
    for seed in 0..100 {
        let exp = Experiment::new(ExperimentConfig { delta: 0, ..micro_config(seed, 1, 4096) }).unwrap();
        let data = exp.draw_trial(1, 4096, 0).unwrap();
        for (i, mode) in MODES.into_iter().enumerate() {
            let res = exp.decode_trial(&data, mode, 0).unwrap();
            if missed(&data.payloads, &res.payloads()) == 0 {
                hits[i] += 1;
            }
            if mode == DecoderMode::Scld {
                // One path in, one parity pattern out.
                for l in 1..4 {
                    if res.path_counts[l - 1] == 1 {
                        assert_eq!(res.support_sizes[l], 1 << exp.profile.info_len(l));
                    }
                }
            } else {
                assert!(res.support_sizes.iter().all(|&s| s == 64));
            }
        }
    }
    assert!(hits.iter().all(|&h| h >= 99), "{hits:?}");
}

#[test]
fn silent_frame_decodes_to_nothing() {
    let exp = micro(3, 2, 16);
    let silent: Vec<SlotObservation> = (0..4).map(|_| SlotObservation::from_samples(CMatrix::zeros(16, 16))).collect();
    let cfg = exp.decoder_config(2, 0);
    let setup = exp.setup();

    let base = decode_baseline(&silent, &setup, &cfg).unwrap();
    assert!(base.recovered.is_empty());
    assert!(base.selections.iter().all(|s| s.is_empty()));

    let scld = decode_scld(&silent, &setup, &cfg).unwrap();
    assert!(scld.recovered.is_empty());
    // No roots, so nothing past slot 0 is attempted.
    assert_eq!(scld.died_at, Some(1));
    assert_eq!(scld.support_sizes, vec![64]);
}

#[test]
fn decoding_is_deterministic() {
    let exp = micro(11, 3, 16);
    let data = exp.draw_trial(3, 16, 5).unwrap();
    for mode in MODES {
        let a = exp.decode_trial(&data, mode, 5).unwrap();
        let b = exp.decode_trial(&data, mode, 5).unwrap();
        assert_eq!(a.recovered, b.recovered);
        assert_eq!(a.gammas, b.gammas);
        assert_eq!(selected(&a), selected(&b));
        assert_eq!(a.support_sizes, b.support_sizes);
        assert_eq!(a.path_counts, b.path_counts);
    }
}

#[test]
fn execution_strategy_does_not_change_results() {
    let exp = micro(12, 3, 16);
    let data = exp.draw_trial(3, 16, 0).unwrap();
    let mut cfg = exp.decoder_config(3, 0);
    let setup = exp.setup();
    cfg.execution = scld::exec::Execution::Parallel;
    let par = decode(DecoderMode::Baseline, &data.observations, &setup, &cfg).unwrap();
    cfg.execution = scld::exec::Execution::Sequential;
    let seq = decode(DecoderMode::Baseline, &data.observations, &setup, &cfg).unwrap();
    assert_eq!(par.gammas, seq.gammas);
    assert_eq!(par.recovered, seq.recovered);
}

#[test]
fn support_law_bound_and_work_reduction() {
    for seed in 0..30 {
        let exp = micro(seed, 3, 16);
        let data = exp.draw_trial(3, 16, 0).unwrap();
        let base = exp.decode_trial(&data, DecoderMode::Baseline, 0).unwrap();
        let scld = exp.decode_trial(&data, DecoderMode::Scld, 0).unwrap();

        assert_eq!(scld.support_sizes[0], 64);
        for l in 1..scld.support_sizes.len() {
            let w = exp.profile.info_len(l);
            assert_eq!(scld.support_sizes[l], (1 << w) * scld.pattern_counts[l]);
            assert!(scld.support_sizes[l] <= 64.min((1 << w) * scld.path_counts[l - 1]));
        }

        let full: usize = base.support_sizes.iter().sum();
        assert_eq!(full, 4 * 64);
        let pruned = scld.pattern_counts.iter().enumerate().skip(1).any(|(l, &c)| c < 1 << exp.profile.parity_len(l));
        if pruned || scld.died_at.is_some() {
            assert!(scld.support_sum() < full);
        } else {
            assert_eq!(scld.support_sum(), full);
        }
    }
}

#[test]
fn true_columns_stay_admissible_while_their_path_lives() {
    let mut checked = 0;
    for seed in 0..30 {
        let exp = micro(seed, 4, 32);
        let data = exp.draw_trial(4, 32, 0).unwrap();
        let truth = true_indices(&exp, &data.payloads);
        let scld = exp.decode_trial(&data, DecoderMode::Scld, 0).unwrap();
        let picks = selected(&scld);
        for user in &truth {
            for l in 1..scld.support_sizes.len() {
                // The true path is active after slot l - 1 iff every true
                // fragment so far was selected.
                if !(0..l).all(|j| picks[j].contains(&(user[j] as usize))) {
                    break;
                }
                let support = admissible_support(&scld.patterns[l - 1], exp.profile.info_len(l));
                assert!(support.contains(user[l] as usize), "seed {seed} slot {l}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "only {checked} checks ran");
}

#[test]
fn never_more_messages_than_users() {
    for seed in 0..20 {
        for ka in [1, 2, 5] {
            let exp = micro(seed, ka, 8);
            let data = exp.draw_trial(ka, 8, 0).unwrap();
            for mode in MODES {
                let res = exp.decode_trial(&data, mode, 0).unwrap();
                assert!(res.recovered.len() <= ka);
                let mut unique = res.payloads();
                unique.dedup();
                assert_eq!(unique.len(), res.recovered.len());
            }
        }
    }
}

#[test]
fn slot_times_cover_every_processed_slot() {
    let exp = micro(4, 2, 16);
    let data = exp.draw_trial(2, 16, 0).unwrap();
    for mode in MODES {
        let res = exp.decode_trial(&data, mode, 0).unwrap();
        assert_eq!(res.slot_seconds.len(), res.support_sizes.len());
        assert!(res.decode_seconds() > 0.0);
    }
}
