//! Leverage scores of the rows of a tall matrix `A` (`d` rows in `R^n`):
//! an exact pseudo-inverse oracle, the sketched estimator, and reweighted
//! with-replacement row sampling.
//!
//! The pipelines call these with `A = X^T`, so the rows scored and sampled
//! here are the feature columns of `X`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{qr_r_factor, solve_upper, sym_eig, triangular_rank, DenseMatrix, MatrixData};
use crate::rng;
use crate::sketch::{apply_left, make_sketch, mul_rows, SketchSpec};

/// Per-row leverage scores of a `d x n` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    pub scores: Vec<f64>,
    /// Multiplicative accuracy; zero for exact scores.
    pub eps_sigma: f64,
    /// Failure probability; zero for exact scores.
    pub delta_sigma: f64,
    pub exact: bool,
    /// Ambient dimension `n` of the rows.
    pub dim: usize,
}

impl LeverageScores {
    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Which JL transform forms the right-hand sketch of the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JlKind {
    Gaussian,
    Ams,
}

/// Sketch sizes of the estimator:
/// `s1 = ceil(s1_const * eps^-2 * n * ln(d / delta))`,
/// `s2 = ceil(s2_const * ln(d / delta))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverageConfig {
    pub s1_const: f64,
    pub s2_const: f64,
    /// Nonzeros per column of the sparse embedding.
    pub sparse_nnz: usize,
    pub jl: JlKind,
    /// Extra attempts with fresh substreams when the sketch loses rank.
    pub max_retries: usize,
}

impl Default for LeverageConfig {
    fn default() -> Self {
        Self {
            s1_const: 8.0,
            s2_const: 24.0,
            sparse_nnz: 4,
            jl: JlKind::Gaussian,
            max_retries: 3,
        }
    }
}

impl LeverageConfig {
    pub fn sketch_sizes(&self, d: usize, n: usize, eps_sigma: f64, delta_sigma: f64) -> (usize, usize) {
        let log_term = (d as f64 / delta_sigma).ln();
        let s1 = (self.s1_const * n as f64 * log_term / (eps_sigma * eps_sigma)).ceil() as usize;
        let s2 = (self.s2_const * log_term).ceil() as usize;
        (s1.max(n), s2.max(1))
    }
}

/// Exact scores `a_j^T (A^T A)^+ a_j`, with eigenvalues of `A^T A` below
/// `RANK_TOL` times the largest treated as zero.
pub fn exact_leverage(a: &MatrixData) -> Result<LeverageScores> {
    let (d, n) = (a.rows(), a.cols());
    if d == 0 || n == 0 {
        return Err(Error::contract(format!(
            "exact_leverage needs a nonempty matrix, got {d}x{n}"
        )));
    }
    let h = a.transpose().gram();
    let eig = sym_eig(&h)?;
    let range = eig.range_indices();
    let scores = if range.is_empty() {
        vec![0.0; d]
    } else {
        // B = V_r diag(lambda_r^{-1/2}); score_j = ||a_j B||^2.
        let b = DenseMatrix::from_fn(n, range.len(), |i, p| {
            let k = range[p];
            eig.vectors[(i, k)] / eig.values[k].sqrt()
        });
        row_sq_norms(&mul_rows(a, &MatrixData::Dense(b)))
    };
    Ok(LeverageScores {
        scores,
        eps_sigma: 0.0,
        delta_sigma: 0.0,
        exact: true,
        dim: n,
    })
}

fn row_sq_norms(m: &DenseMatrix) -> Vec<f64> {
    (0..m.rows())
        .into_par_iter()
        .map(|j| m.row(j).iter().map(|v| v * v).sum())
        .collect()
}

/// Sketched estimator with the default [`LeverageConfig`].
pub fn approx_leverage(a: &MatrixData, eps_sigma: f64, delta_sigma: f64, seed: u64) -> Result<LeverageScores> {
    approx_leverage_with(a, eps_sigma, delta_sigma, seed, &LeverageConfig::default())
}

/// `M = S1 A` with a sparse embedding `S1`, `R` from the QR of `M`,
/// `N = R^{-1} S2` with a JL matrix `S2`, and `score_j = ||a_j N||^2`.
/// Scores are clipped to `[0, 1 + eps_sigma]`.
pub fn approx_leverage_with(
    a: &MatrixData,
    eps_sigma: f64,
    delta_sigma: f64,
    seed: u64,
    cfg: &LeverageConfig,
) -> Result<LeverageScores> {
    let (d, n) = (a.rows(), a.cols());
    if d == 0 || n == 0 {
        return Err(Error::contract(format!(
            "approx_leverage needs a nonempty matrix, got {d}x{n}"
        )));
    }
    if !(eps_sigma > 0.0 && eps_sigma < 1.0) {
        return Err(Error::contract(format!(
            "eps_sigma must lie in (0, 1), got {eps_sigma}"
        )));
    }
    if !(delta_sigma > 0.0 && delta_sigma < 1.0) {
        return Err(Error::contract(format!(
            "delta_sigma must lie in (0, 1), got {delta_sigma}"
        )));
    }
    let (s1, s2) = cfg.sketch_sizes(d, n, eps_sigma, delta_sigma);

    for attempt in 0..=cfg.max_retries {
        let attempt_seed = rng::derive_seed(seed, "leverage/attempt", attempt as u64);
        let s1_sketch = make_sketch(SketchSpec::sparse_embedding(
            s1,
            d,
            cfg.sparse_nnz.min(s1),
            rng::derive_seed(attempt_seed, "leverage/s1", 0),
        ))?;
        let m = apply_left(&s1_sketch, a)?;
        let r = qr_r_factor(&m)?;
        if triangular_rank(&r) < n {
            continue;
        }
        let s2_seed = rng::derive_seed(attempt_seed, "leverage/s2", 0);
        let s2_spec = match cfg.jl {
            JlKind::Gaussian => SketchSpec::gaussian(s2, n, 1.0 / (s2 as f64).sqrt(), s2_seed),
            JlKind::Ams => SketchSpec::ams(s2, n, s2_seed),
        };
        let s2_sketch = make_sketch(s2_spec)?;
        // The n x s2 JL factor is the transpose of the s2 x n sketch.
        let n_mat = solve_upper(&r, &s2_sketch.to_dense().transpose())?;
        let projected = mul_rows(a, &MatrixData::Dense(n_mat));
        let cap = 1.0 + eps_sigma;
        let scores = row_sq_norms(&projected).into_iter().map(|v| v.min(cap)).collect();
        return Ok(LeverageScores {
            scores,
            eps_sigma,
            delta_sigma,
            exact: false,
            dim: n,
        });
    }
    Err(Error::contract(format!(
        "sketched matrix stayed rank-deficient after {} attempts (input rank below {n}?)",
        cfg.max_retries + 1
    )))
}

/// `p_j = score_j / sum(score)`, and the oversampling factor `beta` that
/// certifies `p_j >= beta * sigma_j / n` given the scores' accuracy:
/// `beta = n * (1 - eps_sigma) / sum(score)`.
pub fn build_probabilities(scores: &LeverageScores) -> Result<(Vec<f64>, f64)> {
    if let Some(bad) = scores.scores.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::contract(format!(
            "leverage scores must be nonnegative, found {bad}"
        )));
    }
    let total = scores.sum();
    if total <= 0.0 {
        return Err(Error::contract("all leverage scores are zero"));
    }
    let p: Vec<f64> = scores.scores.iter().map(|s| s / total).collect();
    let beta = scores.dim as f64 * (1.0 - scores.eps_sigma) / total;
    Ok((p, beta))
}

/// `T = ceil(c * eps0^-2 * n * ln(n / delta0))`, for `eps0` in (0, 1) and
/// `delta0` in (0, 0.1).
pub fn chernoff_trials(eps0: f64, delta0: f64, n: usize, c_chernoff: f64) -> Result<usize> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::contract(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    if !(delta0 > 0.0 && delta0 < 0.1) {
        return Err(Error::contract(format!("delta0 must lie in (0, 0.1), got {delta0}")));
    }
    if n == 0 {
        return Err(Error::contract("n must be positive"));
    }
    if !(c_chernoff > 0.0 && c_chernoff.is_finite()) {
        return Err(Error::contract(format!(
            "c_chernoff must be positive, got {c_chernoff}"
        )));
    }
    let t = c_chernoff * n as f64 * (n as f64 / delta0).ln() / (eps0 * eps0);
    Ok(t.ceil() as usize)
}

/// Draws and reweighting factors for the sampling process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub probabilities: Vec<f64>,
    pub beta: f64,
    pub trials: usize,
    pub draws: Vec<usize>,
    /// `1 / sqrt(trials * p[draws[t]])`.
    pub reweights: Vec<f64>,
    pub seed: u64,
}

impl SamplingPlan {
    /// Draws `trials` indices with replacement from `probabilities`.
    pub fn draw(probabilities: Vec<f64>, beta: f64, trials: usize, seed: u64) -> Result<Self> {
        check_distribution(&probabilities)?;
        if trials == 0 {
            return Err(Error::contract("trials must be positive"));
        }
        let dist = WeightedIndex::new(&probabilities)
            .map_err(|e| Error::contract(format!("invalid sampling distribution: {e}")))?;
        let mut rng = rng::stream(seed, "sampling/draws");
        let draws: Vec<usize> = (0..trials).map(|_| dist.sample(&mut rng)).collect();
        Self::from_draws(probabilities, beta, draws, seed)
    }

    /// A plan with prescribed draws, e.g. for enumerating outcomes.
    pub fn from_draws(probabilities: Vec<f64>, beta: f64, draws: Vec<usize>, seed: u64) -> Result<Self> {
        check_distribution(&probabilities)?;
        let trials = draws.len();
        if trials == 0 {
            return Err(Error::contract("trials must be positive"));
        }
        let mut reweights = Vec::with_capacity(trials);
        for &j in &draws {
            let pj = *probabilities
                .get(j)
                .ok_or_else(|| Error::contract(format!("draw {j} out of range")))?;
            if pj <= 0.0 {
                return Err(Error::contract(format!("draw {j} has zero probability")));
            }
            reweights.push(1.0 / (trials as f64 * pj).sqrt());
        }
        Ok(Self {
            probabilities,
            beta,
            trials,
            draws,
            reweights,
            seed,
        })
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::contract("probabilities must be finite and nonnegative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 * p.len().max(1) as f64 {
        return Err(Error::contract(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// `n x T` matrix whose column `t` is `reweights[t] * a_{draws[t]}`.
pub fn weighted_rows(a: &MatrixData, plan: &SamplingPlan) -> Result<DenseMatrix> {
    let n = a.cols();
    if let Some(&bad) = plan.draws.iter().find(|&&j| j >= a.rows()) {
        return Err(Error::dims("weighted_rows", format!("row index < {}", a.rows()), bad));
    }
    if plan.probabilities.len() != a.rows() {
        return Err(Error::dims("weighted_rows", a.rows(), plan.probabilities.len()));
    }
    let t = plan.trials;
    let mut y = DenseMatrix::zeros(n, t);
    for (col, (&j, &w)) in plan.draws.iter().zip(&plan.reweights).enumerate() {
        a.for_each_in_row(j, |i, v| y[(i, col)] = w * v);
    }
    Ok(y)
}

/// `H~ = (1/T) sum_t a_{j_t} a_{j_t}^T / p_{j_t}`, computed as the Gram of
/// the stacked reweighted rows, plus the `(index, weight)` pairs.
pub fn sample_gram(a: &MatrixData, plan: &SamplingPlan) -> Result<(DenseMatrix, Vec<(usize, f64)>)> {
    let y = weighted_rows(a, plan)?;
    let selected = plan.draws.iter().copied().zip(plan.reweights.iter().copied()).collect();
    Ok((y.gram(), selected))
}
