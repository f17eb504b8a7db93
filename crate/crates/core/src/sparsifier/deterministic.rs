use std::time::Instant;

use super::barrier::{bss_select_with, BssConfig, BssOutcome};
use super::{InputMatrix, Method, ReducedMatrix, StageTimings};
use crate::error::{Error, Result};
use crate::matcore::{psd_sandwich_check, sym_eig, DenseMatrix, MatrixData, SymEig};
use crate::sketch::mul_rows;

/// The columns of `X` mapped to `Lambda^{-1/2} V^T x_i`, where
/// `XX^T = V Lambda V^T` restricted to its numerical range.
#[derive(Clone, Debug)]
pub struct Whitened {
    /// `d x rank`; row `i` is the whitened column `i`.
    pub vectors: DenseMatrix,
    pub basis: SymEig,
    /// Indices into `basis.values` spanning the range.
    pub range: Vec<usize>,
}

impl Whitened {
    pub fn rank(&self) -> usize {
        self.range.len()
    }
}

pub fn whiten(x: &InputMatrix) -> Result<Whitened> {
    let g = x.data().gram();
    let basis = sym_eig(&g)?;
    let range = basis.range_indices();
    let n = x.n();
    let proj = DenseMatrix::from_fn(n, range.len(), |i, p| {
        let k = range[p];
        basis.vectors[(i, k)] / basis.values[k].sqrt()
    });
    let vectors = mul_rows(&x.data().transpose(), &MatrixData::Dense(proj));
    Ok(Whitened { vectors, basis, range })
}

#[derive(Clone, Debug)]
pub struct DeterministicRun {
    pub reduced: ReducedMatrix,
    /// `None` for the zero input.
    pub selection: Option<BssOutcome>,
    pub rank: usize,
    pub timings: StageTimings,
}

/// Whitening, barrier selection, and un-whitening: column `i` of `X` enters
/// `Y` as `sqrt(w_i) x_i` for every nonzero weight. The sandwich holds on
/// every successful return.
pub fn sparsify_deterministic(x: &InputMatrix, eps: f64) -> Result<ReducedMatrix> {
    run_deterministic(x, eps, &BssConfig::default()).map(|run| run.reduced)
}

pub fn run_deterministic(x: &InputMatrix, eps: f64, cfg: &BssConfig) -> Result<DeterministicRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::contract(format!("eps must lie in (0, 1), got {eps}")));
    }
    if x.is_zero() {
        return Ok(DeterministicRun {
            reduced: ReducedMatrix::zero(x.n(), Method::Deterministic, None),
            selection: None,
            rank: 0,
            timings: StageTimings::default(),
        });
    }

    let start = Instant::now();
    let white = whiten(x)?;
    let scoring = start.elapsed();

    let start = Instant::now();
    let outcome = bss_select_with(&white.vectors, eps, cfg)?;
    let (indices, scales): (Vec<usize>, Vec<f64>) = outcome
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| (i, w.sqrt()))
        .unzip();
    let reduced = ReducedMatrix::assemble(&x.data().transpose(), indices, scales, Method::Deterministic, None);
    let selection = start.elapsed();

    let check = psd_sandwich_check(&x.data().gram(), &reduced.data().gram(), eps)?;
    if !check.holds {
        return Err(Error::Invariant(format!(
            "un-whitened output reaches only eps = {} (target {eps})",
            check.eps_star
        )));
    }
    Ok(DeterministicRun {
        reduced,
        rank: white.rank(),
        selection: Some(outcome),
        timings: StageTimings { scoring, selection },
    })
}
