//! Block-fading MIMO uplink for one coherence slot.
//!
//! Every active user sends one codebook column; the base station sees
//! `Y = sum_k a_{i_k} h_k^T + Z` with `h_k ~ CN(0, I_M)` and white noise of
//! total complex variance `N0`. Users choosing the same column superpose
//! physically, as in the per-user model, rather than merging into one unit
//! activity.

use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::codebook::Codebook;
use crate::linalg::{self, CMatrix, SplitMatrix, SplitVec};
use crate::Complex64;

/// Column indices picked by the active users in one slot (a multiset).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotTransmission {
    pub slot: usize,
    pub indices: Vec<usize>,
}

/// `(1/M) Y Y^H`, optionally with the scaled factor `Y / sqrt(M)` retained so
/// quadratic forms can be evaluated in `O(nM)` when `M < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    matrix: CMatrix,
    /// Whichever of `S` and `Y / sqrt(M)` gives the cheaper quadratic form.
    kernel: CovKernel,
}

#[derive(Debug, Clone, PartialEq)]
enum CovKernel {
    Dense(SplitMatrix),
    Factor(SplitMatrix),
}

impl SampleCovariance {
    pub fn from_observation(y: &CMatrix) -> Self {
        let scale = Complex64::new(1.0 / (y.ncols() as f64).sqrt(), 0.0);
        let factor = y * scale;
        let mut matrix = &factor * factor.adjoint();
        linalg::symmetrize(&mut matrix);
        let kernel = if factor.ncols() < factor.nrows() {
            CovKernel::Factor(SplitMatrix::from_cmatrix(&factor))
        } else {
            CovKernel::Dense(SplitMatrix::from_cmatrix(&matrix))
        };
        SampleCovariance { matrix, kernel }
    }

    /// Uses `matrix` as is; it must be Hermitian.
    pub fn from_matrix(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "covariance must be square");
        let kernel = CovKernel::Dense(SplitMatrix::from_cmatrix(&matrix));
        SampleCovariance { matrix, kernel }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `u^H S u`.
    #[inline]
    pub fn quadratic_form(&self, u: &SplitVec) -> f64 {
        match &self.kernel {
            CovKernel::Factor(f) => f.factor_form(u),
            CovKernel::Dense(s) => s.hermitian_form(u),
        }
    }
}

/// Received samples for one slot: `n` rows (channel uses) by `M` columns
/// (antennas), plus their sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotObservation {
    pub y: CMatrix,
    pub covariance: SampleCovariance,
}

impl SlotObservation {
    pub fn from_samples(y: CMatrix) -> Self {
        let covariance = SampleCovariance::from_observation(&y);
        SlotObservation { y, covariance }
    }

    /// Hash of the exact sample bits; equal observations hash equally.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.y.nrows(), self.y.ncols()).hash(&mut h);
        for z in self.y.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Circularly-symmetric complex Gaussian with total variance `var`.
#[inline]
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Synthesises one slot. Fading coefficients come from `fading`, noise from
/// `noise`, so the two can be keyed independently.
pub fn simulate_slot<R: Rng + ?Sized, Q: Rng + ?Sized>(
    codebook: &Codebook,
    tx: &SlotTransmission,
    antennas: usize,
    n0: f64,
    fading: &mut R,
    noise: &mut Q,
) -> SlotObservation {
    assert!(antennas >= 1, "at least one antenna");
    assert!(n0 >= 0.0, "noise variance must be non-negative");
    let n = codebook.rows();
    let mut y = CMatrix::zeros(n, antennas);
    for &index in &tx.indices {
        let a = codebook.column(index);
        for m in 0..antennas {
            let h = complex_gaussian(fading, 1.0);
            for (yt, &at) in y.column_mut(m).iter_mut().zip(a) {
                *yt += at * h;
            }
        }
    }
    if n0 > 0.0 {
        for z in y.iter_mut() {
            *z += complex_gaussian(noise, n0);
        }
    }
    SlotObservation::from_samples(y)
}

pub fn sample_covariance(y: &CMatrix) -> CMatrix {
    SampleCovariance::from_observation(y).matrix
}

/// `A diag(gamma) A^H + N0 I` built from the non-zero entries of `gamma`.
pub fn model_covariance(codebook: &Codebook, gamma: &[f64], n0: f64) -> CMatrix {
    let n = codebook.rows();
    let mut sigma = linalg::identity(n, n0);
    for (k, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            let a = codebook.column(k);
            let s = sigma.as_mut_slice();
            // Sigma += g a a^H
            linalg::rank_one_sub(s, n, -g, a);
        }
    }
    sigma
}
