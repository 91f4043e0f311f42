//! Seeded Monte Carlo harness.
//!
//! An [`Experiment`] fixes the outer code and the codebooks once. Each
//! `(K_a, M, trial)` draws fresh payloads, fading and noise from streams keyed
//! by the seed and those coordinates, synthesises all slots once, and hands
//! the same observations to every requested decoder mode.

mod config;
mod report;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, OneOrMany, N0};
pub use report::{wilson_interval, ExperimentReport, PointReport};

use crate::channel::{simulate_slot, SlotObservation, SlotTransmission};
use crate::codebook::Codebook;
use crate::error::Result;
use crate::exec::{map_indexed, with_threads, Execution};
use crate::pipeline::{decode, DecodeResult, DecoderConfig, DecoderMode, Setup};
use crate::rng::{stream, Domain};
use crate::tree_code::{encode_outer, ParityGenerators, ParityProfile, Payload};

/// Fraction of `sent` payloads (counted with multiplicity) missing from `recovered`.
pub fn pupe(sent: &[Payload], recovered: &[Payload]) -> f64 {
    if sent.is_empty() {
        return 0.0;
    }
    missed(sent, recovered) as f64 / sent.len() as f64
}

pub fn missed(sent: &[Payload], recovered: &[Payload]) -> usize {
    sent.iter().filter(|w| !recovered.contains(w)).count()
}

/// One decoder's outcome on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub mode: DecoderMode,
    pub missed: usize,
    pub recovered: usize,
    /// Set when the decoder aborted; the trial then counts every user as missed.
    pub failure: Option<String>,
    pub decode_seconds: f64,
    pub support_sizes: Vec<usize>,
    pub pattern_counts: Vec<usize>,
}

impl ModeOutcome {
    pub fn support_sum(&self) -> usize {
        self.support_sizes.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub active_users: usize,
    pub antennas: usize,
    /// Hash of every slot's received samples.
    pub observation_fingerprint: u64,
    pub modes: Vec<ModeOutcome>,
}

impl TrialResult {
    pub fn mode(&self, mode: DecoderMode) -> Option<&ModeOutcome> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Ground truth and observations of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub payloads: Vec<Payload>,
    pub transmissions: Vec<SlotTransmission>,
    pub observations: Vec<SlotObservation>,
}

impl TrialData {
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for obs in &self.observations {
            obs.fingerprint().hash(&mut h);
        }
        h.finish()
    }
}

/// Shared, immutable state of an experiment.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub profile: ParityProfile,
    pub generators: ParityGenerators,
    pub codebooks: Vec<Codebook>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let profile = config.profile()?;
        let generators = ParityGenerators::generate(&profile, &mut stream(config.seed, Domain::Generators, &[]));
        let power = config.power();
        let codebooks = map_indexed(config.execution, profile.slots(), |l| {
            Codebook::for_slot(config.seed, l, config.n, profile.subblock_len(l), power)
        });
        Ok(Experiment { config, profile, generators, codebooks })
    }

    pub fn setup(&self) -> Setup<'_> {
        Setup { profile: &self.profile, generators: &self.generators, codebooks: &self.codebooks, n0: N0 }
    }

    /// Draws payloads, encodes them and synthesises every slot.
    pub fn draw_trial(&self, active_users: usize, antennas: usize, trial: usize) -> Result<TrialData> {
        let seed = self.config.seed;
        let key = [active_users as u64, trial as u64];
        let mut rng = stream(seed, Domain::Payloads, &key);
        let payloads: Vec<Payload> =
            (0..active_users).map(|_| Payload::random(self.profile.payload_bits(), &mut rng)).collect();
        let coded = payloads
            .iter()
            .map(|w| encode_outer(w, &self.generators, &self.profile))
            .collect::<Result<Vec<_>>>()?;
        let transmissions: Vec<SlotTransmission> = (0..self.profile.slots())
            .map(|l| SlotTransmission { slot: l, indices: coded.iter().map(|c| c.subblocks[l] as usize).collect() })
            .collect();
        let observations = map_indexed(self.config.execution, self.profile.slots(), |l| {
            let coords = [active_users as u64, trial as u64, l as u64];
            simulate_slot(
                &self.codebooks[l],
                &transmissions[l],
                antennas,
                N0,
                &mut stream(seed, Domain::Channel, &coords),
                &mut stream(seed, Domain::Noise, &coords),
            )
        });
        Ok(TrialData { payloads, transmissions, observations })
    }

    pub fn decoder_config(&self, active_users: usize, trial: usize) -> DecoderConfig {
        DecoderConfig {
            path_cap: self.config.path_cap,
            scld_rule: self.config.scld_rule,
            pruning: self.config.pruning,
            execution: self.config.execution,
            order_seed: self.config.seed,
            order_stream: ((active_users as u64) << 32) | trial as u64,
            ..DecoderConfig::new(active_users, self.config.ad_config())
        }
    }

    /// Decodes one trial with `mode`, returning the full decoder trace.
    pub fn decode_trial(&self, data: &TrialData, mode: DecoderMode, trial: usize) -> Result<DecodeResult> {
        let cfg = self.decoder_config(data.payloads.len(), trial);
        decode(mode, &data.observations, &self.setup(), &cfg)
    }

    /// Runs every configured mode on one trial. Deterministic in
    /// `(seed, K_a, trial)` apart from the timing fields.
    pub fn run_trial(&self, active_users: usize, antennas: usize, trial: usize) -> Result<TrialResult> {
        let data = self.draw_trial(active_users, antennas, trial)?;
        let modes = self
            .config
            .modes
            .iter()
            .map(|&mode| match self.decode_trial(&data, mode, trial) {
                Ok(res) => ModeOutcome {
                    mode,
                    missed: missed(&data.payloads, &res.payloads()),
                    recovered: res.recovered.len(),
                    failure: None,
                    decode_seconds: res.decode_seconds(),
                    support_sizes: res.support_sizes,
                    pattern_counts: res.pattern_counts,
                },
                Err(e) => ModeOutcome {
                    mode,
                    missed: active_users,
                    recovered: 0,
                    failure: Some(e.to_string()),
                    decode_seconds: 0.0,
                    support_sizes: Vec::new(),
                    pattern_counts: Vec::new(),
                },
            })
            .collect();
        Ok(TrialResult {
            trial,
            active_users,
            antennas,
            observation_fingerprint: data.fingerprint(),
            modes,
        })
    }

    /// All trials of one `(K_a, M)` point, in trial order.
    pub fn run_point(&self, active_users: usize, antennas: usize) -> Result<Vec<TrialResult>> {
        map_indexed(self.config.execution, self.config.trials, |t| self.run_trial(active_users, antennas, t))
            .into_iter()
            .collect()
    }

    /// Runs the full sweep and aggregates it.
    pub fn run(&self) -> Result<ExperimentReport> {
        let start = Instant::now();
        let mut points = Vec::new();
        for &ka in &self.config.active_users.values() {
            for &m in &self.config.antennas.values() {
                let trials = self.run_point(ka, m)?;
                points.extend(report::aggregate(ka, m, &self.config.modes, &trials));
            }
        }
        Ok(ExperimentReport {
            config: self.config.clone(),
            power: self.config.power(),
            points,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Builds the experiment and runs it on `config.threads` workers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let config = config.clone();
    let threads = if config.execution == Execution::Sequential { 1 } else { config.threads };
    with_threads(threads, move || Experiment::new(config)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pupe_examples() {
        let w = |b: u8| Payload::from_bits(vec![b, 0]).unwrap();
        let sent = [w(0), w(1)];
        assert_eq!(pupe(&sent, &sent), 0.0);

        let four: Vec<Payload> = (0..4).map(|i| Payload::from_bits(vec![i / 2, i % 2]).unwrap()).collect();
        assert_eq!(pupe(&four, &four[..3]), 0.25);

        let dup = [w(1), w(1)];
        assert_eq!(pupe(&dup, &[w(1)]), 0.0);
        assert_eq!(pupe(&dup, &[]), 1.0);
    }
}
