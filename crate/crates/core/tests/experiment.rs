mod common;

use common::{micro, micro_config};
use scld::exec::Execution;
use scld::experiment::{run_experiment, Experiment, ExperimentConfig, ModeOutcome, OneOrMany, TrialResult};
use scld::pipeline::{DecoderMode, Pruning};
use scld::tree_code::RootRule;

fn untimed(mut t: TrialResult) -> TrialResult {
    t.modes.iter_mut().for_each(|m: &mut ModeOutcome| m.decode_seconds = 0.0);
    t
}

#[test]
fn trials_are_reproducible() {
    let exp = micro(21, 3, 16);
    let a = untimed(exp.run_trial(3, 16, 4).unwrap());
    let b = untimed(micro(21, 3, 16).run_trial(3, 16, 4).unwrap());
    assert_eq!(a, b);
    let c = untimed(exp.run_trial(3, 16, 5).unwrap());
    assert_ne!(a.observation_fingerprint, c.observation_fingerprint);
}

#[test]
fn modes_see_the_same_observations() {
    let exp = micro(22, 3, 16);
    let both = exp.run_trial(3, 16, 0).unwrap();
    let only_scld = Experiment::new(ExperimentConfig { modes: vec![DecoderMode::Scld], ..micro_config(22, 3, 16) })
        .unwrap()
        .run_trial(3, 16, 0)
        .unwrap();
    assert_eq!(both.observation_fingerprint, only_scld.observation_fingerprint);
    let mut a = both.mode(DecoderMode::Scld).unwrap().clone();
    let mut b = only_scld.mode(DecoderMode::Scld).unwrap().clone();
    a.decode_seconds = 0.0;
    b.decode_seconds = 0.0;
    assert_eq!(a, b);

    let data = exp.draw_trial(3, 16, 0).unwrap();
    assert_eq!(data.fingerprint(), both.observation_fingerprint);
}

#[test]
fn missed_counts_stay_in_range() {
    let exp = micro(23, 4, 4);
    for t in exp.run_point(4, 4).unwrap() {
        for m in &t.modes {
            assert!(m.missed <= 4);
            assert!(m.failure.is_none());
        }
    }
}

#[test]
fn single_user_micro_sweep_has_zero_pupe() {
    let cfg = ExperimentConfig { delta: 0, trials: 20, ..micro_config(24, 1, 4096) };
    let report = run_experiment(&cfg).unwrap();
    for mode in [DecoderMode::Baseline, DecoderMode::Scld] {
        let p = report.point(1, 4096, mode).unwrap();
        assert_eq!(p.pupe, 0.0);
        assert_eq!(p.pupe_ci_lo, 0.0);
        assert!(p.pupe_ci_hi > 0.0 && p.pupe_ci_hi < 0.2);
        assert!(p.runtime_ratio.is_some());
    }
}

#[test]
fn saturated_pruning_matches_baseline_pupe() {
    let cfg = ExperimentConfig {
        trials: 20,
        pruning: Pruning::Saturated,
        scld_rule: RootRule::UniqueSurvivor,
        ..micro_config(25, 2, 16)
    };
    let report = run_experiment(&cfg).unwrap();
    let base = report.point(2, 16, DecoderMode::Baseline).unwrap();
    let scld = report.point(2, 16, DecoderMode::Scld).unwrap();
    assert_eq!(base.pupe, scld.pupe);
    assert_eq!(base.mean_support_sum, scld.mean_support_sum);
}

#[test]
fn more_antennas_do_not_hurt() {
    let cfg = ExperimentConfig {
        trials: 200,
        antennas: OneOrMany::Many(vec![4, 16]),
        ..micro_config(26, 3, 4)
    };
    let report = run_experiment(&cfg).unwrap();
    for mode in [DecoderMode::Baseline, DecoderMode::Scld] {
        let few = report.point(3, 4, mode).unwrap();
        let many = report.point(3, 16, mode).unwrap();
        let width = few.pupe_ci_hi - few.pupe_ci_lo;
        assert!(many.pupe <= few.pupe + width, "{mode:?}: {} vs {}", many.pupe, few.pupe);
    }
}

#[test]
fn reports_do_not_depend_on_scheduling() {
    let cfg = ExperimentConfig { trials: 6, antennas: OneOrMany::Many(vec![8, 16]), ..micro_config(27, 2, 8) };
    let par = run_experiment(&ExperimentConfig { execution: Execution::Parallel, threads: 2, ..cfg.clone() }).unwrap();
    let seq = run_experiment(&ExperimentConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
    // The configs differ in the scheduling fields only.
    assert_eq!(par.without_timing().points, seq.without_timing().points);
}

#[test]
fn shipped_reference_config_is_the_default() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());
}
