//! Per-slot spherical codebooks and pruned column supports.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{stream, Domain};
use crate::tree_code::ParityPatternSet;
use crate::Complex64;

/// An `n x 2^v` complex codebook with every column of squared norm `nP`.
/// Storage is column-major, so each column is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    rows: usize,
    cols: usize,
    power: f64,
    data: Vec<Complex64>,
}

impl Codebook {
    /// Draws every column uniformly from the complex sphere of radius
    /// `sqrt(n * power)` by normalising a circularly-symmetric Gaussian vector.
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, n: usize, subblock_bits: usize, power: f64) -> Self {
        assert!(n >= 1, "codebook needs at least one row");
        assert!(subblock_bits >= 1, "codebook needs at least one sub-block bit");
        assert!(power > 0.0, "codebook power must be positive");
        let cols = 1usize << subblock_bits;
        let radius = (n as f64 * power).sqrt();
        let mut data = Vec::with_capacity(n * cols);
        for _ in 0..cols {
            let start = data.len();
            data.extend((0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))));
            let col = &mut data[start..];
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let scale = radius / norm;
            col.iter_mut().for_each(|z| *z *= scale);
        }
        Codebook { rows: n, cols, power, data }
    }

    /// Codebook of `slot` for an experiment seeded with `seed`.
    pub fn for_slot(seed: u64, slot: usize, n: usize, subblock_bits: usize, power: f64) -> Self {
        Self::generate(&mut stream(seed, Domain::Codebook, &[slot as u64]), n, subblock_bits, power)
    }

    /// Wraps explicit column-major data; columns are used as given.
    pub fn from_columns(rows: usize, data: Vec<Complex64>, power: f64) -> Self {
        assert!(rows >= 1 && !data.is_empty() && data.len().is_multiple_of(rows), "ragged codebook data");
        Codebook { rows, cols: data.len() / rows, power, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

/// `[x]_2` with the first bit most significant.
pub fn subblock_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// Sorted column indices over which the detector runs in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    pub slot: usize,
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn full(slot: usize, cols: usize) -> Self {
        SupportSet { slot, indices: (0..cols).collect() }
    }

    /// From arbitrary indices; sorts and deduplicates.
    pub fn from_indices(slot: usize, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SupportSet { slot, indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Columns whose parity segment is one of `patterns`, for every choice of
/// the `info_bits` information bits: `{ [w || p]_2 }`.
pub fn admissible_support(patterns: &ParityPatternSet, info_bits: usize) -> SupportSet {
    let p = patterns.parity_len;
    let mut indices = Vec::with_capacity(patterns.len() << info_bits);
    // index = [w]_2 * 2^p + [p]_2; iterating w outermost keeps the output sorted.
    for w in 0..1usize << info_bits {
        for &pattern in &patterns.patterns {
            debug_assert!(pattern < 1u64 << p);
            indices.push((w << p) | pattern as usize);
        }
    }
    SupportSet { slot: patterns.slot, indices }
}
