//! Outer tree code.
//!
//! A `B`-bit payload is cut into `L` information fragments. Every fragment
//! after the first is followed by parity bits that are random GF(2) linear
//! combinations of all *preceding* information bits, giving sub-blocks of
//! `v_l = w_l + p_l` bits. The decoder rebuilds payloads by walking a tree
//! from every slot-0 fragment and keeping only children whose parity segment
//! agrees with the parity recomputed from the path so far.
//!
//! Bit strings of at most [`MAX_SUBBLOCK_BITS`] bits are packed into `u64`
//! with the first bit most significant, so a sub-block's packed value is also
//! its codebook column index.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported sub-block length. A slot's codebook has `2^v` columns,
/// so anything near this is already far beyond a usable codebook size.
pub const MAX_SUBBLOCK_BITS: usize = 30;

/// Default per-root cap on simultaneously active paths.
pub const DEFAULT_PATH_CAP: usize = 1 << 16;

#[inline]
fn mask(bits: usize) -> u64 {
    if bits == 0 {
        0
    } else {
        u64::MAX >> (64 - bits)
    }
}

/// Per-slot split of sub-blocks into information and parity bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct ParityProfile {
    subblock: Vec<usize>,
    parity: Vec<usize>,
    info: Vec<usize>,
    /// Offset of each slot's information bits inside the payload.
    offsets: Vec<usize>,
    payload_bits: usize,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    subblock: Vec<usize>,
    parity: Vec<usize>,
}

impl TryFrom<ProfileRepr> for ParityProfile {
    type Error = Error;
    fn try_from(repr: ProfileRepr) -> Result<Self> {
        ParityProfile::new(repr.subblock, repr.parity)
    }
}

impl From<ParityProfile> for ProfileRepr {
    fn from(p: ParityProfile) -> Self {
        ProfileRepr { subblock: p.subblock, parity: p.parity }
    }
}

impl ParityProfile {
    /// Builds a profile from per-slot sub-block and parity lengths.
    pub fn new(subblock: Vec<usize>, parity: Vec<usize>) -> Result<Self> {
        if subblock.is_empty() {
            return Err(Error::InvalidProfile("at least one slot is required".into()));
        }
        if subblock.len() != parity.len() {
            return Err(Error::InvalidProfile(format!(
                "{} sub-block lengths but {} parity lengths",
                subblock.len(),
                parity.len()
            )));
        }
        if parity[0] != 0 {
            return Err(Error::InvalidProfile("slot 0 must not carry parity bits".into()));
        }
        let mut info = Vec::with_capacity(subblock.len());
        let mut offsets = Vec::with_capacity(subblock.len());
        let mut total = 0;
        for (l, (&v, &p)) in subblock.iter().zip(&parity).enumerate() {
            if v == 0 || v > MAX_SUBBLOCK_BITS {
                return Err(Error::InvalidProfile(format!(
                    "slot {l}: sub-block length {v} outside 1..={MAX_SUBBLOCK_BITS}"
                )));
            }
            if p > v {
                return Err(Error::InvalidProfile(format!(
                    "slot {l}: {p} parity bits exceed sub-block length {v}"
                )));
            }
            offsets.push(total);
            info.push(v - p);
            total += v - p;
        }
        Ok(ParityProfile { subblock, parity, info, offsets, payload_bits: total })
    }

    /// Profile with a common sub-block length and the given parity lengths.
    pub fn uniform(subblock_len: usize, parity: Vec<usize>) -> Result<Self> {
        Self::new(vec![subblock_len; parity.len()], parity)
    }

    /// Like [`ParityProfile::uniform`], additionally checking the payload size.
    pub fn with_payload_bits(payload_bits: usize, subblock_len: usize, parity: Vec<usize>) -> Result<Self> {
        let profile = Self::uniform(subblock_len, parity)?;
        if profile.payload_bits != payload_bits {
            return Err(Error::InvalidProfile(format!(
                "information bits sum to {} but the payload has {payload_bits} bits",
                profile.payload_bits
            )));
        }
        Ok(profile)
    }

    /// 32 slots of 12-bit sub-blocks with parity `(0, 9 x 28, 12 x 3)`, i.e. 96 payload bits.
    pub fn reference() -> Self {
        Self::uniform(12, reference_parity()).expect("reference profile is valid")
    }

    pub fn slots(&self) -> usize {
        self.subblock.len()
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn subblock_len(&self, slot: usize) -> usize {
        self.subblock[slot]
    }

    pub fn parity_len(&self, slot: usize) -> usize {
        self.parity[slot]
    }

    pub fn info_len(&self, slot: usize) -> usize {
        self.info[slot]
    }

    pub fn parity_lengths(&self) -> &[usize] {
        &self.parity
    }

    pub fn subblock_lengths(&self) -> &[usize] {
        &self.subblock
    }

    /// Number of codebook columns in `slot`, `2^v`.
    pub fn columns(&self, slot: usize) -> usize {
        1usize << self.subblock[slot]
    }

    /// Information segment of a packed sub-block.
    #[inline]
    pub fn info_of(&self, slot: usize, subblock: u64) -> u64 {
        subblock >> self.parity[slot]
    }

    /// Parity segment of a packed sub-block.
    #[inline]
    pub fn parity_of(&self, slot: usize, subblock: u64) -> u64 {
        subblock & mask(self.parity[slot])
    }

    #[inline]
    pub fn join(&self, slot: usize, info: u64, parity: u64) -> u64 {
        (info << self.parity[slot]) | parity
    }
}

/// The parity profile used throughout the reference experiments.
pub fn reference_parity() -> Vec<usize> {
    let mut p = vec![0];
    p.extend(std::iter::repeat_n(9, 28));
    p.extend(std::iter::repeat_n(12, 3));
    p
}

/// Binary generator matrices `G[j][l]` of shape `w_j x p_l`, for `j < l`.
///
/// Row `i` of `G[j][l]` is stored as a `p_l`-bit mask: it is added into the
/// parity of slot `l` whenever bit `i` of information fragment `j` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityGenerators {
    /// `rows[l][j][i]`
    rows: Vec<Vec<Vec<u64>>>,
}

impl ParityGenerators {
    /// Draws every entry i.i.d. uniform over {0, 1}.
    pub fn generate<R: Rng + ?Sized>(profile: &ParityProfile, rng: &mut R) -> Self {
        let slots = profile.slots();
        let mut rows = Vec::with_capacity(slots);
        for l in 0..slots {
            let p = profile.parity_len(l);
            let per_slot = (0..l)
                .map(|j| {
                    (0..profile.info_len(j))
                        .map(|_| rng.random::<u64>() & mask(p))
                        .collect()
                })
                .collect();
            rows.push(per_slot);
        }
        ParityGenerators { rows }
    }

    /// Builds generators from explicit 0/1 matrices, `matrices[l][j]` being
    /// `G[j][l]` with rows indexed by information bit.
    pub fn from_matrices(profile: &ParityProfile, matrices: &[Vec<Vec<Vec<u8>>>]) -> Result<Self> {
        if matrices.len() != profile.slots() {
            return Err(Error::InvalidGenerator(format!(
                "expected {} slots of generators, got {}",
                profile.slots(),
                matrices.len()
            )));
        }
        let mut rows = Vec::with_capacity(matrices.len());
        for (l, per_slot) in matrices.iter().enumerate() {
            if per_slot.len() != l {
                return Err(Error::InvalidGenerator(format!(
                    "slot {l} needs {l} generator matrices, got {}",
                    per_slot.len()
                )));
            }
            let mut slot_rows = Vec::with_capacity(l);
            for (j, g) in per_slot.iter().enumerate() {
                if g.len() != profile.info_len(j) {
                    return Err(Error::InvalidGenerator(format!(
                        "G[{j}][{l}] has {} rows, expected {}",
                        g.len(),
                        profile.info_len(j)
                    )));
                }
                let mut packed = Vec::with_capacity(g.len());
                for row in g {
                    if row.len() != profile.parity_len(l) {
                        return Err(Error::InvalidGenerator(format!(
                            "G[{j}][{l}] row has {} columns, expected {}",
                            row.len(),
                            profile.parity_len(l)
                        )));
                    }
                    packed.push(pack_bits(row)?);
                }
                slot_rows.push(packed);
            }
            rows.push(slot_rows);
        }
        Ok(ParityGenerators { rows })
    }

    pub fn slots(&self) -> usize {
        self.rows.len()
    }

    /// Row masks of `G[j][l]`.
    pub fn matrix(&self, j: usize, l: usize) -> &[u64] {
        &self.rows[l][j]
    }
}

/// Packs a 0/1 slice, first element most significant.
pub fn pack_bits(bits: &[u8]) -> Result<u64> {
    if bits.len() > 64 {
        return Err(Error::InvalidGenerator(format!("{} bits do not fit in a word", bits.len())));
    }
    bits.iter().try_fold(0u64, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as u64),
        other => Err(Error::InvalidGenerator(format!("bit value {other} is not 0 or 1"))),
    })
}

/// Unpacks the low `len` bits of `value`, most significant first.
pub fn unpack_bits(value: u64, len: usize) -> Vec<u8> {
    (0..len).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// A `B`-bit user message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Payload(Vec<u8>);

impl Payload {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidGenerator(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Payload(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Payload(vec![0; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Payload((0..len).map(|_| rng.random::<bool>() as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn xor(&self, other: &Payload) -> Payload {
        Payload(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

impl std::fmt::Display for Payload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Cuts a payload into per-slot information fragments (packed).
pub fn split_payload(payload: &Payload, profile: &ParityProfile) -> Result<Vec<u64>> {
    if payload.len() != profile.payload_bits() {
        return Err(Error::InvalidPayload {
            expected: profile.payload_bits(),
            actual: payload.len(),
        });
    }
    (0..profile.slots())
        .map(|l| {
            let start = profile.offsets[l];
            pack_bits(&payload.bits()[start..start + profile.info_len(l)])
        })
        .collect()
}

/// Inverse of [`split_payload`].
pub fn join_fragments(info: &[u64], profile: &ParityProfile) -> Payload {
    let mut bits = Vec::with_capacity(profile.payload_bits());
    for (l, &w) in info.iter().enumerate() {
        bits.extend(unpack_bits(w, profile.info_len(l)));
    }
    Payload(bits)
}

/// Parity bits of slot `slot` given the information fragments of all
/// preceding slots: `p(l) = sum_{j<l} w(j) G[j][l]` over GF(2).
pub fn compute_parity(info: &[u64], gens: &ParityGenerators, profile: &ParityProfile, slot: usize) -> Result<u64> {
    if slot == 0 || slot >= profile.slots() {
        return Err(Error::InvalidGenerator(format!(
            "parity slot {slot} outside 1..{}",
            profile.slots()
        )));
    }
    if gens.slots() != profile.slots() {
        return Err(Error::InvalidGenerator(format!(
            "generators cover {} slots, profile has {}",
            gens.slots(),
            profile.slots()
        )));
    }
    if info.len() < slot {
        return Err(Error::InvalidGenerator(format!(
            "slot {slot} parity needs {slot} information fragments, got {}",
            info.len()
        )));
    }
    for (j, &w) in info[..slot].iter().enumerate() {
        if w & !mask(profile.info_len(j)) != 0 {
            return Err(Error::InvalidGenerator(format!(
                "fragment {j} exceeds its {} information bits",
                profile.info_len(j)
            )));
        }
    }
    Ok(parity_unchecked(info, gens, profile, slot))
}

#[inline]
fn parity_unchecked(info: &[u64], gens: &ParityGenerators, profile: &ParityProfile, slot: usize) -> u64 {
    let mut acc = 0u64;
    for (j, &w) in info[..slot].iter().enumerate() {
        let len = profile.info_len(j);
        let rows = gens.matrix(j, slot);
        for (i, &row) in rows.iter().enumerate() {
            if (w >> (len - 1 - i)) & 1 == 1 {
                acc ^= row;
            }
        }
    }
    acc
}

/// An outer-encoded message: `L` packed sub-blocks `w(l) || p(l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    pub subblocks: Vec<u64>,
}

impl CodedMessage {
    pub fn info(&self, profile: &ParityProfile) -> Vec<u64> {
        self.subblocks
            .iter()
            .enumerate()
            .map(|(l, &v)| profile.info_of(l, v))
            .collect()
    }

    pub fn payload(&self, profile: &ParityProfile) -> Payload {
        join_fragments(&self.info(profile), profile)
    }
}

pub fn encode_outer(payload: &Payload, gens: &ParityGenerators, profile: &ParityProfile) -> Result<CodedMessage> {
    let info = split_payload(payload, profile)?;
    let mut subblocks = Vec::with_capacity(info.len());
    subblocks.push(info[0]);
    for l in 1..profile.slots() {
        let parity = compute_parity(&info, gens, profile, l)?;
        subblocks.push(profile.join(l, info[l], parity));
    }
    Ok(CodedMessage { subblocks })
}

/// A recovered sub-block (equivalently, a codebook column index) together
/// with the detector's activity estimate for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredFragment {
    pub index: usize,
    pub gamma: f64,
}

/// A partial message surviving all parity checks up to its last stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePath {
    /// Index of the slot-0 fragment this path grew from.
    pub root: usize,
    /// Packed sub-blocks for stages `0..=stage`.
    pub fragments: Vec<u64>,
    /// Sum of the activity estimates of the fragments.
    pub score: f64,
}

impl ActivePath {
    pub fn root(root: usize, fragment: ScoredFragment) -> Self {
        ActivePath { root, fragments: vec![fragment.index as u64], score: fragment.gamma }
    }

    pub fn stage(&self) -> usize {
        self.fragments.len() - 1
    }

    pub fn info(&self, profile: &ParityProfile) -> Vec<u64> {
        self.fragments
            .iter()
            .enumerate()
            .map(|(l, &v)| profile.info_of(l, v))
            .collect()
    }

    /// Parity this path demands from its next sub-block.
    pub fn next_parity(&self, gens: &ParityGenerators, profile: &ParityProfile) -> u64 {
        parity_unchecked(&self.info(profile), gens, profile, self.fragments.len())
    }

    pub fn payload(&self, profile: &ParityProfile) -> Payload {
        join_fragments(&self.info(profile), profile)
    }
}

/// Outcome of one tree stage.
#[derive(Debug, Clone, Default)]
pub struct Extension {
    pub paths: Vec<ActivePath>,
    /// Roots whose path count exceeded the cap; their paths were dropped.
    pub overflowed_roots: Vec<usize>,
}

/// Extends every path by every fragment of `slot` whose parity segment
/// matches the parity recomputed from the path.
///
/// Output order is path-major, then fragment order, so results are
/// deterministic. Roots that would exceed `cap` paths are dropped entirely
/// and reported in [`Extension::overflowed_roots`].
pub fn extend_paths(
    paths: &[ActivePath],
    fragments: &[ScoredFragment],
    gens: &ParityGenerators,
    profile: &ParityProfile,
    slot: usize,
    cap: usize,
) -> Extension {
    let mut by_parity: HashMap<u64, Vec<&ScoredFragment>> = HashMap::new();
    for f in fragments {
        by_parity.entry(profile.parity_of(slot, f.index as u64)).or_default().push(f);
    }

    let mut out = Vec::new();
    let mut per_root: HashMap<usize, usize> = HashMap::new();
    for path in paths {
        debug_assert_eq!(path.fragments.len(), slot);
        let parity = path.next_parity(gens, profile);
        if let Some(matches) = by_parity.get(&parity) {
            for f in matches {
                let mut fragments = Vec::with_capacity(slot + 1);
                fragments.extend_from_slice(&path.fragments);
                fragments.push(f.index as u64);
                out.push(ActivePath { root: path.root, fragments, score: path.score + f.gamma });
                *per_root.entry(path.root).or_default() += 1;
            }
        }
    }

    let mut overflowed_roots: Vec<usize> =
        per_root.into_iter().filter(|&(_, count)| count > cap).map(|(root, _)| root).collect();
    if !overflowed_roots.is_empty() {
        overflowed_roots.sort_unstable();
        out.retain(|p| overflowed_roots.binary_search(&p.root).is_err());
    }
    Extension { paths: out, overflowed_roots }
}

/// The set of parity patterns reachable at `slot` from the active paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityPatternSet {
    pub slot: usize,
    pub parity_len: usize,
    pub patterns: BTreeSet<u64>,
}

impl ParityPatternSet {
    /// Every `2^p` pattern of `slot`; no pruning.
    pub fn saturated(profile: &ParityProfile, slot: usize) -> Self {
        let p = profile.parity_len(slot);
        ParityPatternSet { slot, parity_len: p, patterns: (0..1u64 << p).collect() }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.patterns.len() == 1usize << self.parity_len
    }
}

pub fn permissible_parities(
    paths: &[ActivePath],
    gens: &ParityGenerators,
    profile: &ParityProfile,
    slot: usize,
) -> ParityPatternSet {
    assert!(slot >= 1 && slot < profile.slots(), "slot {slot} has no parity");
    ParityPatternSet {
        slot,
        parity_len: profile.parity_len(slot),
        patterns: paths.iter().map(|p| p.next_parity(gens, profile)).collect(),
    }
}

/// How complete paths are turned into message candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootRule {
    /// A root yields a message only if exactly one path survives from it.
    #[default]
    UniqueSurvivor,
    /// Every surviving path is a candidate; ranking decides.
    Ranked,
}

pub fn select_survivors(paths: Vec<ActivePath>, rule: RootRule) -> Vec<ActivePath> {
    match rule {
        RootRule::Ranked => paths,
        RootRule::UniqueSurvivor => {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for p in &paths {
                *counts.entry(p.root).or_default() += 1;
            }
            paths.into_iter().filter(|p| counts[&p.root] == 1).collect()
        }
    }
}

/// A decoded message and its accumulated score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    pub payload: Payload,
    pub score: f64,
}

/// Deduplicates complete paths into payloads, ranks them by descending score
/// (ties by payload) and keeps at most `max_messages`.
pub fn finalize_paths(paths: &[ActivePath], profile: &ParityProfile, max_messages: usize) -> Vec<Recovered> {
    let mut best: HashMap<Payload, f64> = HashMap::new();
    for path in paths {
        debug_assert_eq!(path.fragments.len(), profile.slots());
        let score = best.entry(path.payload(profile)).or_insert(f64::NEG_INFINITY);
        *score = score.max(path.score);
    }
    let mut out: Vec<Recovered> = best.into_iter().map(|(payload, score)| Recovered { payload, score }).collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.payload.cmp(&b.payload)));
    out.truncate(max_messages);
    out
}

#[derive(Debug, Clone, Default)]
pub struct TreeDecodeOutcome {
    pub recovered: Vec<Recovered>,
    /// Active path count after each stage.
    pub path_counts: Vec<usize>,
    pub overflowed_roots: Vec<usize>,
}

/// Runs the tree decoder over independently recovered fragment lists, one
/// tree per slot-0 fragment.
pub fn tree_decode(
    lists: &[Vec<ScoredFragment>],
    gens: &ParityGenerators,
    profile: &ParityProfile,
    max_messages: usize,
    rule: RootRule,
    cap: usize,
) -> TreeDecodeOutcome {
    assert_eq!(lists.len(), profile.slots(), "one fragment list per slot");
    let mut paths: Vec<ActivePath> =
        lists[0].iter().enumerate().map(|(r, &f)| ActivePath::root(r, f)).collect();
    let mut path_counts = vec![paths.len()];
    let mut overflowed_roots = Vec::new();
    for (slot, list) in lists.iter().enumerate().skip(1) {
        let ext = extend_paths(&paths, list, gens, profile, slot, cap);
        paths = ext.paths;
        overflowed_roots.extend(ext.overflowed_roots);
        path_counts.push(paths.len());
    }
    let survivors = select_survivors(paths, rule);
    TreeDecodeOutcome {
        recovered: finalize_paths(&survivors, profile, max_messages),
        path_counts,
        overflowed_roots,
    }
}

/// The isolated tree decoder: a root is valid only if a single path survives.
pub fn tree_decode_baseline(
    lists: &[Vec<ScoredFragment>],
    gens: &ParityGenerators,
    profile: &ParityProfile,
    max_messages: usize,
) -> Vec<Payload> {
    tree_decode(lists, gens, profile, max_messages, RootRule::UniqueSurvivor, DEFAULT_PATH_CAP)
        .recovered
        .into_iter()
        .map(|r| r.payload)
        .collect()
}
