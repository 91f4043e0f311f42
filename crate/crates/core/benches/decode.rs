//! Parallel vs sequential execution of the same work, plus the detector's
//! inner kernel. Results are identical across strategies; only time differs.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use scld::activity::{coordinate_descent, AdConfig};
use scld::channel::{simulate_slot, SlotTransmission};
use scld::codebook::{Codebook, SupportSet};
use scld::exec::Execution;
use scld::experiment::{Experiment, ExperimentConfig, OneOrMany};
use scld::pipeline::DecoderMode;
use scld::rng::SimRng;

const STRATEGIES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

/// Eight 10-bit slots of 50 channel uses; large enough that per-slot work
/// dwarfs scheduling overhead.
fn mid_config(execution: Execution) -> ExperimentConfig {
    ExperimentConfig {
        payload_bits: 52,
        slots: 8,
        n: 50,
        antennas: OneOrMany::One(25),
        active_users: OneOrMany::One(8),
        subblock_bits: 10,
        parity_profile: vec![0, 4, 4, 4, 4, 4, 4, 4],
        ebn0_db: 6.0,
        trials: 4,
        execution,
        ..ExperimentConfig::default()
    }
}

fn baseline_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("baseline_decode");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, execution) in STRATEGIES {
        let exp = Experiment::new(mid_config(execution)).unwrap();
        let data = exp.draw_trial(8, 25, 0).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(exp.decode_trial(&data, DecoderMode::Baseline, 0).unwrap()))
        });
    }
    group.finish();
}

fn trial_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_point");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, execution) in STRATEGIES {
        let exp = Experiment::new(mid_config(execution)).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| black_box(exp.run_point(8, 25).unwrap())));
    }
    group.finish();
}

fn detector_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("coordinate_descent");
    group.sample_size(10);
    let mut rng = SimRng::seed_from_u64(5);
    let codebook = Codebook::generate(&mut rng, 100, 10, 0.03);
    for antennas in [25, 200] {
        let tx = SlotTransmission { slot: 0, indices: (0..25).map(|k| k * 37 % 1024).collect() };
        let (mut fading, mut noise) = (SimRng::seed_from_u64(6), SimRng::seed_from_u64(7));
        let obs = simulate_slot(&codebook, &tx, antennas, 1.0, &mut fading, &mut noise);
        let support = SupportSet::full(0, 1024);
        group.bench_function(BenchmarkId::new("n100_cols1024_M", antennas), |b| {
            b.iter(|| {
                let mut order = SimRng::seed_from_u64(0);
                black_box(
                    coordinate_descent(&obs.covariance, &codebook, &support, &AdConfig::default(), 1.0, &mut order)
                        .unwrap(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, baseline_decode, trial_sweep, detector_kernel);
criterion_main!(benches);
