//! End-to-end receivers.
//!
//! * **Baseline**: every slot runs activity detection over its whole codebook
//!   (slots are independent and may run concurrently), then the tree decoder
//!   stitches the per-slot fragment lists.
//! * **SCLD**: slots are processed in order. After slot `l - 1` the tree
//!   decoder's active paths determine which parity patterns can still occur
//!   at slot `l`; detection at slot `l` only runs over the columns carrying
//!   one of those patterns, and its output immediately extends the paths.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activity::{coordinate_descent, select_fragments, AdConfig};
use crate::channel::SlotObservation;
use crate::codebook::{admissible_support, Codebook, SupportSet};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::rng::{stream, Domain};
use crate::tree_code::{
    extend_paths, finalize_paths, permissible_parities, select_survivors, tree_decode, ActivePath, ParityGenerators,
    ParityPatternSet, ParityProfile, Recovered, RootRule, ScoredFragment, DEFAULT_PATH_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    Baseline,
    Scld,
}

impl DecoderMode {
    pub fn name(self) -> &'static str {
        match self {
            DecoderMode::Baseline => "baseline",
            DecoderMode::Scld => "scld",
        }
    }
}

impl std::str::FromStr for DecoderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "baseline" => Ok(DecoderMode::Baseline),
            "scld" => Ok(DecoderMode::Scld),
            other => Err(Error::InvalidConfig(format!("unknown decoder mode {other:?}"))),
        }
    }
}

/// How SCLD restricts the detector at slots after the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    /// Only columns whose parity is reachable from an active path.
    #[default]
    Admissible,
    /// Every parity pattern is treated as permissible (no pruning).
    Saturated,
}

/// Everything shared by all decodes of an experiment point.
#[derive(Debug, Clone, Copy)]
pub struct Setup<'a> {
    pub profile: &'a ParityProfile,
    pub generators: &'a ParityGenerators,
    pub codebooks: &'a [Codebook],
    pub n0: f64,
}

#[derive(Debug, Clone)]
pub struct DecoderConfig {
    pub active_users: usize,
    pub ad: AdConfig,
    pub path_cap: usize,
    /// Root validity rule for SCLD; the baseline always uses [`RootRule::UniqueSurvivor`].
    pub scld_rule: RootRule,
    pub pruning: Pruning,
    pub execution: Execution,
    /// Keys the coordinate-order streams together with the slot index.
    pub order_seed: u64,
    pub order_stream: u64,
}

impl DecoderConfig {
    pub fn new(active_users: usize, ad: AdConfig) -> Self {
        DecoderConfig {
            active_users,
            ad,
            path_cap: DEFAULT_PATH_CAP,
            scld_rule: RootRule::Ranked,
            pruning: Pruning::Admissible,
            execution: Execution::Parallel,
            order_seed: 0,
            order_stream: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeResult {
    pub recovered: Vec<Recovered>,
    /// `|S_l|` for every processed slot.
    pub support_sizes: Vec<usize>,
    /// `|P_l|` for every processed slot (`1` at slot 0, `2^p` in baseline mode).
    pub pattern_counts: Vec<usize>,
    /// Detection (plus, for SCLD, path extension) time per processed slot.
    pub slot_seconds: Vec<f64>,
    /// Time spent in the isolated tree decoder (baseline only).
    pub tree_seconds: f64,
    /// Active paths after each processed stage.
    pub path_counts: Vec<usize>,
    /// Fragments picked in each processed slot, in rank order.
    pub selections: Vec<Vec<ScoredFragment>>,
    /// Non-zero activity estimates per processed slot.
    pub gammas: Vec<Vec<(usize, f64)>>,
    pub passes: Vec<usize>,
    /// First slot that was not processed because every path had died.
    pub died_at: Option<usize>,
    pub overflowed_roots: Vec<usize>,
    /// SCLD only: the permissible parity set used at each slot `1..`.
    pub patterns: Vec<ParityPatternSet>,
}

impl DecodeResult {
    pub fn payloads(&self) -> Vec<crate::tree_code::Payload> {
        self.recovered.iter().map(|r| r.payload.clone()).collect()
    }

    pub fn decode_seconds(&self) -> f64 {
        self.slot_seconds.iter().sum::<f64>() + self.tree_seconds
    }

    pub fn support_sum(&self) -> usize {
        self.support_sizes.iter().sum()
    }
}

fn check_shapes(observations: &[SlotObservation], setup: &Setup<'_>) -> Result<()> {
    let slots = setup.profile.slots();
    if observations.len() != slots || setup.codebooks.len() != slots || setup.generators.slots() != slots {
        return Err(Error::InvalidConfig(format!(
            "{} observations, {} codebooks and {} generator slots for a {slots}-slot profile",
            observations.len(),
            setup.codebooks.len(),
            setup.generators.slots()
        )));
    }
    for (l, (obs, cb)) in observations.iter().zip(setup.codebooks).enumerate() {
        if obs.covariance.dim() != cb.rows() || cb.cols() != setup.profile.columns(l) {
            return Err(Error::InvalidConfig(format!("slot {l}: observation and codebook shapes disagree")));
        }
    }
    Ok(())
}

struct SlotOutput {
    selection: Vec<ScoredFragment>,
    gamma: Vec<(usize, f64)>,
    passes: usize,
}

fn detect_slot(
    slot: usize,
    obs: &SlotObservation,
    codebook: &Codebook,
    support: &SupportSet,
    setup: &Setup<'_>,
    config: &DecoderConfig,
) -> Result<SlotOutput> {
    let mut rng = stream(config.order_seed, Domain::CoordinateOrder, &[config.order_stream, slot as u64]);
    let run = coordinate_descent(&obs.covariance, codebook, support, &config.ad, setup.n0, &mut rng)?;
    Ok(SlotOutput {
        selection: select_fragments(&run.estimate, config.active_users, config.ad.delta),
        gamma: run.estimate.nonzero(),
        passes: run.passes,
    })
}

/// Inner and outer decoders in isolation.
pub fn decode_baseline(observations: &[SlotObservation], setup: &Setup<'_>, config: &DecoderConfig) -> Result<DecodeResult> {
    check_shapes(observations, setup)?;
    let slots = setup.profile.slots();
    let per_slot = map_indexed(config.execution, slots, |l| {
        let start = Instant::now();
        let support = SupportSet::full(l, setup.codebooks[l].cols());
        let out = detect_slot(l, &observations[l], &setup.codebooks[l], &support, setup, config);
        (out, start.elapsed().as_secs_f64())
    });

    let mut result = DecodeResult::default();
    let mut lists = Vec::with_capacity(slots);
    for (l, (out, seconds)) in per_slot.into_iter().enumerate() {
        let out = out?;
        result.support_sizes.push(setup.codebooks[l].cols());
        result.pattern_counts.push(1 << setup.profile.parity_len(l));
        result.slot_seconds.push(seconds);
        result.passes.push(out.passes);
        result.gammas.push(out.gamma);
        lists.push(out.selection.clone());
        result.selections.push(out.selection);
    }

    let start = Instant::now();
    let tree = tree_decode(
        &lists,
        setup.generators,
        setup.profile,
        config.active_users,
        RootRule::UniqueSurvivor,
        config.path_cap,
    );
    result.tree_seconds = start.elapsed().as_secs_f64();
    result.recovered = tree.recovered;
    result.path_counts = tree.path_counts;
    result.overflowed_roots = tree.overflowed_roots;
    Ok(result)
}

/// Inner and outer decoders in tandem, pruning the codebook slot by slot.
pub fn decode_scld(observations: &[SlotObservation], setup: &Setup<'_>, config: &DecoderConfig) -> Result<DecodeResult> {
    check_shapes(observations, setup)?;
    let profile = setup.profile;
    let mut result = DecodeResult::default();

    let start = Instant::now();
    let support = SupportSet::full(0, setup.codebooks[0].cols());
    let out = detect_slot(0, &observations[0], &setup.codebooks[0], &support, setup, config)?;
    let mut paths: Vec<ActivePath> =
        out.selection.iter().enumerate().map(|(r, &f)| ActivePath::root(r, f)).collect();
    result.support_sizes.push(support.len());
    result.pattern_counts.push(1);
    result.path_counts.push(paths.len());
    result.passes.push(out.passes);
    result.gammas.push(out.gamma);
    result.selections.push(out.selection);
    result.slot_seconds.push(start.elapsed().as_secs_f64());

    for (l, obs) in observations.iter().enumerate().skip(1) {
        if paths.is_empty() && config.pruning == Pruning::Admissible {
            result.died_at = Some(l);
            break;
        }
        let start = Instant::now();
        let patterns = match config.pruning {
            Pruning::Admissible => permissible_parities(&paths, setup.generators, profile, l),
            Pruning::Saturated => ParityPatternSet::saturated(profile, l),
        };
        let support = admissible_support(&patterns, profile.info_len(l));
        let out = detect_slot(l, obs, &setup.codebooks[l], &support, setup, config)?;
        let ext = extend_paths(&paths, &out.selection, setup.generators, profile, l, config.path_cap);
        paths = ext.paths;
        result.overflowed_roots.extend(ext.overflowed_roots);
        result.support_sizes.push(support.len());
        result.pattern_counts.push(patterns.len());
        result.patterns.push(patterns);
        result.path_counts.push(paths.len());
        result.passes.push(out.passes);
        result.gammas.push(out.gamma);
        result.selections.push(out.selection);
        result.slot_seconds.push(start.elapsed().as_secs_f64());
    }

    if result.died_at.is_none() {
        let start = Instant::now();
        let survivors = select_survivors(paths, config.scld_rule);
        result.recovered = finalize_paths(&survivors, profile, config.active_users);
        *result.slot_seconds.last_mut().unwrap() += start.elapsed().as_secs_f64();
    }
    Ok(result)
}

pub fn decode(
    mode: DecoderMode,
    observations: &[SlotObservation],
    setup: &Setup<'_>,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    match mode {
        DecoderMode::Baseline => decode_baseline(observations, setup, config),
        DecoderMode::Scld => decode_scld(observations, setup, config),
    }
}
