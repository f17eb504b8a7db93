//! The two compression pipelines, `X (n x d) -> Y (n x m)` with
//! `(1 - eps) XX^T <= YY^T <= (1 + eps) XX^T`:
//!
//! * [`sparsify_randomized`]: sketched leverage scores, then reweighted
//!   column sampling.
//! * [`sparsify_deterministic`]: whitening followed by two-barrier greedy
//!   selection.

mod barrier;
mod deterministic;
mod randomized;

pub use barrier::{bss_select, bss_select_with, steps_per_dimension, BssConfig, BssOutcome, BssState};
pub use deterministic::{run_deterministic, sparsify_deterministic, whiten, DeterministicRun, Whitened};
pub use randomized::{run_randomized, sparsify_randomized, RandomizedConfig, RandomizedRun};

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, MatrixData};

/// Upper limit (exclusive) on the declared radius `r`.
pub const MAX_RADIUS: f64 = 0.1;

/// The feature matrix `X` together with its declared radius
/// `r >= ||XX^T||_inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMatrix {
    data: MatrixData,
    radius: f64,
}

impl InputMatrix {
    /// Builds and validates `||XX^T||_inf <= radius` (one full Gram product).
    pub fn new(data: MatrixData, radius: f64) -> Result<Self> {
        let x = Self::new_unvalidated(data, radius)?;
        x.validate_radius()?;
        Ok(x)
    }

    /// Checks shape and the range of `radius`, trusting the caller for the
    /// norm bound.
    pub fn new_unvalidated(data: MatrixData, radius: f64) -> Result<Self> {
        let (n, d) = (data.rows(), data.cols());
        if n == 0 || d < n {
            return Err(Error::contract(format!(
                "input must satisfy d >= n >= 1, got n = {n}, d = {d}"
            )));
        }
        if !(radius > 0.0 && radius < MAX_RADIUS) {
            return Err(Error::contract(format!(
                "radius must lie in (0, {MAX_RADIUS}), got {radius}"
            )));
        }
        Ok(Self { data, radius })
    }

    /// Uses the measured `||XX^T||_inf` as the radius.
    pub fn from_measured(data: MatrixData) -> Result<Self> {
        let r = data.gram().inf_norm();
        let radius = if r > 0.0 { r } else { f64::MIN_POSITIVE };
        Self::new_unvalidated(data, radius)
    }

    pub fn validate_radius(&self) -> Result<()> {
        let g = self.data.gram();
        let n = g.rows();
        let mut worst = (0, 0, 0.0f64);
        for i in 0..n {
            for (j, &v) in g.row(i).iter().enumerate() {
                if v.abs() > worst.2.abs() {
                    worst = (i, j, v);
                }
            }
        }
        if worst.2.abs() > self.radius {
            return Err(Error::RadiusViolation {
                i: worst.0,
                j: worst.1,
                value: worst.2,
                radius: self.radius,
            });
        }
        Ok(())
    }

    pub fn data(&self) -> &MatrixData {
        &self.data
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn nnz(&self) -> usize {
        self.data.nnz()
    }

    pub fn is_zero(&self) -> bool {
        self.data.nnz() == 0
    }

    pub fn into_data(self) -> MatrixData {
        self.data
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Randomized,
    Deterministic,
}

/// The compressed matrix `Y` and where its columns came from: column `t`
/// is `weights[t]` times column `selected_indices[t]` of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedMatrix {
    data: DenseMatrix,
    selected_indices: Vec<usize>,
    weights: Vec<f64>,
    method: Method,
    seed: Option<u64>,
}

impl ReducedMatrix {
    /// Assembles `Y` from the columns of `X` (given as its transpose).
    fn assemble(
        x_transposed: &MatrixData,
        selected_indices: Vec<usize>,
        weights: Vec<f64>,
        method: Method,
        seed: Option<u64>,
    ) -> Self {
        let n = x_transposed.cols();
        let mut data = DenseMatrix::zeros(n, selected_indices.len());
        for (t, (&j, &w)) in selected_indices.iter().zip(&weights).enumerate() {
            x_transposed.for_each_in_row(j, |i, v| data[(i, t)] = w * v);
        }
        Self {
            data,
            selected_indices,
            weights,
            method,
            seed,
        }
    }

    /// Canonical output for `X = 0`: a zero `n x 1` matrix built from
    /// column 0 with weight 1.
    fn zero(n: usize, method: Method, seed: Option<u64>) -> Self {
        Self {
            data: DenseMatrix::zeros(n, 1),
            selected_indices: vec![0],
            weights: vec![1.0],
            method,
            seed,
        }
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn into_data(self) -> DenseMatrix {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn m(&self) -> usize {
        self.data.cols()
    }

    pub fn selected_indices(&self) -> &[usize] {
        &self.selected_indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Distinct original columns used.
    pub fn distinct_columns(&self) -> usize {
        let mut idx = self.selected_indices.clone();
        idx.sort_unstable();
        idx.dedup();
        idx.len()
    }

    /// Largest deviation between `Y` and the matrix rebuilt from
    /// `(selected_indices, weights, X)`.
    pub fn provenance_error(&self, x: &InputMatrix) -> Result<f64> {
        if x.n() != self.n() {
            return Err(Error::dims("provenance_error", x.n(), self.n()));
        }
        if let Some(&bad) = self.selected_indices.iter().find(|&&j| j >= x.d()) {
            return Err(Error::dims(
                "provenance_error",
                format!("column index < {}", x.d()),
                bad,
            ));
        }
        let rebuilt = Self::assemble(
            &x.data().transpose(),
            self.selected_indices.clone(),
            self.weights.clone(),
            self.method,
            self.seed,
        );
        Ok(rebuilt.data.max_abs_diff(&self.data))
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    /// Leverage scores (randomized) or whitening (deterministic).
    pub scoring: Duration,
    /// Sampling or barrier selection, including assembly of `Y`.
    pub selection: Duration,
}
