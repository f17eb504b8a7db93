use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{InputMatrix, Method, ReducedMatrix, StageTimings};
use crate::error::{Error, Result};
use crate::leverage::{
    approx_leverage_with, build_probabilities, chernoff_trials, LeverageConfig, LeverageScores, SamplingPlan,
};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedConfig {
    /// Accuracy of the sketched leverage scores; any constant below 1 works.
    pub eps_sigma: f64,
    /// Failure probability of the score estimate; `delta / 2` when unset.
    pub delta_sigma: Option<f64>,
    pub c_chernoff: f64,
    pub leverage: LeverageConfig,
}

impl Default for RandomizedConfig {
    fn default() -> Self {
        Self {
            eps_sigma: 0.5,
            delta_sigma: None,
            c_chernoff: 4.0,
            leverage: LeverageConfig::default(),
        }
    }
}

/// Output of the randomized pipeline with its intermediate products.
/// `scores` and `plan` are `None` for the zero input.
#[derive(Clone, Debug)]
pub struct RandomizedRun {
    pub reduced: ReducedMatrix,
    pub scores: Option<LeverageScores>,
    pub plan: Option<SamplingPlan>,
    pub timings: StageTimings,
}

/// Samples `m = chernoff_trials(eps, delta, n)` columns of `X` with
/// probability proportional to their approximate leverage, each rescaled by
/// `1 / sqrt(m p_j)`.
pub fn sparsify_randomized(x: &InputMatrix, eps: f64, delta: f64, seed: u64) -> Result<ReducedMatrix> {
    run_randomized(x, eps, delta, seed, &RandomizedConfig::default()).map(|run| run.reduced)
}

pub fn run_randomized(
    x: &InputMatrix,
    eps: f64,
    delta: f64,
    seed: u64,
    cfg: &RandomizedConfig,
) -> Result<RandomizedRun> {
    let n = x.n();
    let trials = chernoff_trials(eps, delta, n, cfg.c_chernoff)?;
    let delta_sigma = cfg.delta_sigma.unwrap_or(delta / 2.0);
    if x.is_zero() {
        return Ok(RandomizedRun {
            reduced: ReducedMatrix::zero(n, Method::Randomized, Some(seed)),
            scores: None,
            plan: None,
            timings: StageTimings::default(),
        });
    }

    let start = Instant::now();
    let a = x.data().transpose();
    let scores = approx_leverage_with(
        &a,
        cfg.eps_sigma,
        delta_sigma,
        rng::derive_seed(seed, "randomized/leverage", 0),
        &cfg.leverage,
    )?;
    let scoring = start.elapsed();

    let start = Instant::now();
    let (p, beta) = build_probabilities(&scores)?;
    let plan = SamplingPlan::draw(p, beta, trials, rng::derive_seed(seed, "randomized/sampling", 0))?;
    let reduced = ReducedMatrix::assemble(
        &a,
        plan.draws.clone(),
        plan.reweights.clone(),
        Method::Randomized,
        Some(seed),
    );
    let selection = start.elapsed();

    if reduced.m() != trials {
        return Err(Error::Invariant(format!(
            "sampled {} columns, expected {trials}",
            reduced.m()
        )));
    }
    Ok(RandomizedRun {
        reduced,
        scores: Some(scores),
        plan: Some(plan),
        timings: StageTimings { scoring, selection },
    })
}
