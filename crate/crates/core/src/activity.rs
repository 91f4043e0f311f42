//! Covariance-matching activity detection.
//!
//! Given the sample covariance `S` of one slot, the detector looks for a
//! non-negative activity vector `gamma` minimising
//!
//! ```text
//! f(gamma) = log det(Sigma) + tr(Sigma^{-1} S),   Sigma = A diag(gamma) A^H + N0 I
//! ```
//!
//! by cyclic coordinate descent. Each coordinate has a closed-form minimiser
//!
//! ```text
//! d* = (a^H Sigma^{-1} S Sigma^{-1} a - a^H Sigma^{-1} a) / (a^H Sigma^{-1} a)^2
//! ```
//!
//! clipped so that `gamma_k` stays non-negative, and `Sigma^{-1}` is kept up to
//! date with a Sherman-Morrison rank-one update using the clipped step.
//! Coordinates outside the supplied support are never touched.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{model_covariance, SampleCovariance};
use crate::codebook::{Codebook, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SplitMatrix, SplitVec};
use crate::tree_code::ScoredFragment;
use crate::Complex64;

/// Below this the Sherman-Morrison denominator is treated as singular.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateOrder {
    /// Ascending column index every pass.
    Fixed,
    /// A fresh random permutation of the support every pass.
    #[default]
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdConfig {
    pub max_passes: usize,
    /// Stop once a full pass lowers the objective by less than this fraction.
    pub rel_tol: f64,
    /// Extra fragments kept beyond the number of active users.
    pub delta: usize,
    pub coordinate_order: CoordinateOrder,
    /// Recompute the precision matrix from scratch every this many passes (0 = never).
    pub refresh_every: usize,
}

impl Default for AdConfig {
    fn default() -> Self {
        AdConfig {
            max_passes: 10,
            rel_tol: 1e-6,
            delta: 5,
            coordinate_order: CoordinateOrder::Shuffled,
            refresh_every: 5,
        }
    }
}

impl AdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_passes == 0 {
            return Err(Error::InvalidConfig("max_passes must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return Err(Error::InvalidConfig("rel_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Current activity estimate and the matching precision `Sigma^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma: Vec<f64>,
    precision: SplitMatrix,
    pub n0: f64,
}

impl GammaEstimate {
    /// `gamma = 0`, `Sigma^{-1} = I / N0`.
    pub fn initial(columns: usize, n: usize, n0: f64) -> Self {
        let precision = SplitMatrix::from_cmatrix(&linalg::identity(n, 1.0 / n0));
        GammaEstimate { gamma: vec![0.0; columns], precision, n0 }
    }

    /// Builds a consistent state for an arbitrary `gamma` by direct inversion.
    pub fn from_gamma(codebook: &Codebook, gamma: Vec<f64>, n0: f64) -> Result<Self> {
        let precision = linalg::hpd_inverse(&model_covariance(codebook, &gamma, n0))?;
        Ok(GammaEstimate { gamma, precision: SplitMatrix::from_cmatrix(&precision), n0 })
    }

    /// Re-inverts the model covariance, discarding accumulated rounding.
    pub fn refresh(&mut self, codebook: &Codebook) -> Result<()> {
        let inverse = linalg::hpd_inverse(&model_covariance(codebook, &self.gamma, self.n0))?;
        self.precision = SplitMatrix::from_cmatrix(&inverse);
        Ok(())
    }

    /// The maintained `Sigma^{-1}`.
    pub fn precision(&self) -> CMatrix {
        self.precision.to_cmatrix()
    }

    /// Non-zero entries as `(index, gamma)` in index order.
    pub fn nonzero(&self) -> Vec<(usize, f64)> {
        self.gamma.iter().enumerate().filter(|(_, &g)| g != 0.0).map(|(i, &g)| (i, g)).collect()
    }
}

/// `log det(Sigma) + tr(Sigma^{-1} S)` at `gamma`.
pub fn nll_objective(gamma: &[f64], codebook: &Codebook, sample_cov: &CMatrix, n0: f64) -> Result<f64> {
    let sigma = model_covariance(codebook, gamma, n0);
    let chol = linalg::hpd_cholesky(&sigma)?;
    let l = chol.l_dirty();
    let log_det: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    let solved = chol.solve(sample_cov);
    let value = log_det + solved.trace().re;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericalFailure(format!("objective evaluated to {value}")))
    }
}

/// What one coordinate update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Unconstrained coordinate minimiser.
    pub d_star: f64,
    /// Step actually taken after clipping at zero.
    pub applied: f64,
}

/// Reusable buffer for [`coordinate_step`].
#[derive(Debug, Clone)]
pub struct Workspace {
    u: SplitVec,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace { u: SplitVec::zeros(n) }
    }
}

/// Updates coordinate `k` (column `a_k`) in place.
pub fn coordinate_step(
    k: usize,
    a_k: &[Complex64],
    state: &mut GammaEstimate,
    sample_cov: &SampleCovariance,
    ws: &mut Workspace,
) -> Result<Step> {
    let u = &mut ws.u;
    // u = Sigma^{-1} a
    state.precision.matvec(a_k, u);
    let s = u.real_dot(a_k);
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::NumericalFailure(format!("a^H Sigma^-1 a = {s} for column {k}")));
    }
    // a^H Sigma^{-1} S Sigma^{-1} a = u^H S u
    let t = sample_cov.quadratic_form(u);
    let d_star = (t - s) / (s * s);
    if !d_star.is_finite() {
        return Err(Error::NumericalFailure(format!("non-finite step for column {k}")));
    }
    let old = state.gamma[k];
    let new = (old + d_star).max(0.0);
    let applied = new - old;
    if applied == 0.0 {
        return Ok(Step { d_star, applied });
    }
    let denom = 1.0 + applied * s;
    if denom <= DENOMINATOR_FLOOR {
        return Err(Error::NumericalFailure(format!(
            "rank-one update denominator {denom} for column {k}"
        )));
    }
    state.precision.rank_one_sub(applied / denom, u);
    state.gamma[k] = new;
    Ok(Step { d_star, applied })
}

/// Result of a full coordinate-descent run.
#[derive(Debug, Clone)]
pub struct Descent {
    pub estimate: GammaEstimate,
    pub passes: usize,
    /// Objective before the first pass and after each pass.
    pub objective: Vec<f64>,
}

/// Runs coordinate descent over `support`, starting from `gamma = 0`.
pub fn coordinate_descent<R: Rng + ?Sized>(
    sample_cov: &SampleCovariance,
    codebook: &Codebook,
    support: &SupportSet,
    config: &AdConfig,
    n0: f64,
    rng: &mut R,
) -> Result<Descent> {
    let state = GammaEstimate::initial(codebook.cols(), codebook.rows(), n0);
    coordinate_descent_from(state, sample_cov, codebook, support, config, rng)
}

/// Like [`coordinate_descent`] but from a given consistent state.
pub fn coordinate_descent_from<R: Rng + ?Sized>(
    mut state: GammaEstimate,
    sample_cov: &SampleCovariance,
    codebook: &Codebook,
    support: &SupportSet,
    config: &AdConfig,
    rng: &mut R,
) -> Result<Descent> {
    config.validate()?;
    if support.is_empty() {
        return Err(Error::InvalidConfig("activity detection needs a non-empty support".into()));
    }
    if sample_cov.dim() != codebook.rows() {
        return Err(Error::InvalidConfig(format!(
            "covariance is {}x{} but codebook columns have length {}",
            sample_cov.dim(),
            sample_cov.dim(),
            codebook.rows()
        )));
    }
    let mut ws = Workspace::new(codebook.rows());
    let mut order = support.indices().to_vec();
    let mut objective = vec![nll_objective(&state.gamma, codebook, sample_cov.matrix(), state.n0)?];
    let mut passes = 0;
    while passes < config.max_passes {
        if config.coordinate_order == CoordinateOrder::Shuffled {
            order.shuffle(rng);
        }
        for &k in &order {
            coordinate_step(k, codebook.column(k), &mut state, sample_cov, &mut ws)?;
        }
        passes += 1;
        if config.refresh_every > 0 && passes % config.refresh_every == 0 {
            state.refresh(codebook)?;
        }
        let value = nll_objective(&state.gamma, codebook, sample_cov.matrix(), state.n0)?;
        let prev = *objective.last().unwrap();
        objective.push(value);
        if (prev - value) <= config.rel_tol * prev.abs() {
            break;
        }
    }
    Ok(Descent { estimate: state, passes, objective })
}

/// The `count` largest strictly positive entries of `gamma`, ties broken by
/// ascending index, returned in rank order.
pub fn select_top(gamma: &[f64], count: usize) -> Vec<ScoredFragment> {
    let mut nonzero: Vec<ScoredFragment> = gamma
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0.0)
        .map(|(index, &gamma)| ScoredFragment { index, gamma })
        .collect();
    nonzero.sort_by(|a, b| b.gamma.total_cmp(&a.gamma).then(a.index.cmp(&b.index)));
    nonzero.truncate(count);
    nonzero
}

/// Picks the `K_a + delta` most active fragments of a slot.
pub fn select_fragments(estimate: &GammaEstimate, active_users: usize, delta: usize) -> Vec<ScoredFragment> {
    select_top(&estimate.gamma, active_users + delta)
}
