use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activity::{AdConfig, CoordinateOrder};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pipeline::{DecoderMode, Pruning};
use crate::tree_code::{reference_parity, ParityProfile, RootRule, DEFAULT_PATH_CAP};

/// Noise power; every energy in the simulator is relative to it.
pub const N0: f64 = 1.0;

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<usize> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl From<Vec<usize>> for OneOrMany {
    fn from(v: Vec<usize>) -> Self {
        OneOrMany::Many(v)
    }
}

/// Experiment description, read from a TOML document. Unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Payload bits per user.
    #[serde(rename = "B")]
    pub payload_bits: usize,
    /// Coherence slots per frame.
    #[serde(rename = "L")]
    pub slots: usize,
    /// Channel uses per slot.
    pub n: usize,
    /// Receive antennas; one report row per value.
    #[serde(rename = "M")]
    pub antennas: OneOrMany,
    /// Active users; one report row per value.
    #[serde(rename = "K_a")]
    pub active_users: OneOrMany,
    #[serde(rename = "EbN0_dB")]
    pub ebn0_db: f64,
    /// Sub-block length, common to all slots.
    pub subblock_bits: usize,
    pub parity_profile: Vec<usize>,
    pub delta: usize,
    pub max_passes: usize,
    pub rel_tol: f64,
    pub coordinate_order: CoordinateOrder,
    pub refresh_every: usize,
    pub modes: Vec<DecoderMode>,
    pub trials: usize,
    pub seed: u64,
    /// Total user population; informational only.
    #[serde(rename = "K_tot", skip_serializing_if = "Option::is_none")]
    pub total_users: Option<u64>,
    pub path_cap: usize,
    pub scld_rule: RootRule,
    pub pruning: Pruning,
    /// Largest tolerated fraction of decodes aborted by a numerical failure.
    pub failure_threshold: f64,
    /// Worker threads (0 = all cores).
    pub threads: usize,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ad = AdConfig::default();
        ExperimentConfig {
            payload_bits: 96,
            slots: 32,
            n: 100,
            antennas: OneOrMany::Many(vec![25, 50]),
            active_users: OneOrMany::One(25),
            ebn0_db: 0.0,
            subblock_bits: 12,
            parity_profile: reference_parity(),
            delta: ad.delta,
            max_passes: ad.max_passes,
            rel_tol: ad.rel_tol,
            coordinate_order: ad.coordinate_order,
            refresh_every: ad.refresh_every,
            modes: vec![DecoderMode::Baseline, DecoderMode::Scld],
            trials: 100,
            seed: 1,
            total_users: None,
            path_cap: DEFAULT_PATH_CAP,
            scld_rule: RootRule::Ranked,
            pruning: Pruning::Admissible,
            failure_threshold: 0.0,
            threads: 0,
            execution: Execution::Parallel,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses without the consistency checks, for callers that still want to
    /// override fields before validating.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config = Self::read(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn profile(&self) -> Result<ParityProfile> {
        ParityProfile::with_payload_bits(self.payload_bits, self.subblock_bits, self.parity_profile.clone())
    }

    pub fn ad_config(&self) -> AdConfig {
        AdConfig {
            max_passes: self.max_passes,
            rel_tol: self.rel_tol,
            delta: self.delta,
            coordinate_order: self.coordinate_order,
            refresh_every: self.refresh_every,
        }
    }

    /// Total channel uses per frame, `N = nL`.
    pub fn channel_uses(&self) -> usize {
        self.n * self.slots
    }

    /// Per-symbol power from `Eb/N0 = N P / (B N0)`.
    pub fn power(&self) -> f64 {
        self.payload_bits as f64 * 10f64.powf(self.ebn0_db / 10.0) * N0 / self.channel_uses() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.parity_profile.len() != self.slots {
            return bad(format!(
                "parity profile has {} entries but L = {}",
                self.parity_profile.len(),
                self.slots
            ));
        }
        self.profile().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.antennas.values().is_empty() || self.antennas.values().contains(&0) {
            return bad("M must list positive antenna counts".into());
        }
        if self.active_users.values().is_empty() || self.active_users.values().contains(&0) {
            return bad("K_a must list positive user counts".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.modes.is_empty() {
            return bad("at least one decoder mode is required".into());
        }
        if !self.ebn0_db.is_finite() {
            return bad("EbN0_dB must be finite".into());
        }
        if self.path_cap == 0 {
            return bad("path_cap must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return bad("failure_threshold must lie in [0, 1]".into());
        }
        self.ad_config().validate()
    }
}
