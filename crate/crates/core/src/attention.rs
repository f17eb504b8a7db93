//! Symmetric softmax attention `D^{-1} exp(XX^T)` and the error report
//! comparing the attention of `X` against that of a compressed `Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{entrywise_exp, psd_sandwich_check, DenseMatrix, MatrixData};
use crate::sparsifier::{InputMatrix, ReducedMatrix, MAX_RADIUS};

/// Constant in the bound `exp_rel_err <= C_EXP * r`.
pub const C_EXP: f64 = 6.0;
/// Constant in the bound `rowsum_rel_err <= C_ROWSUM * r`.
pub const C_ROWSUM: f64 = 6.0;
/// Slack on the entrywise bound for `YY^T`.
pub const ENTRY_SLACK: f64 = 1e-12;

/// A Gram matrix with its entrywise exponential, row sums, and attention.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionPair {
    pub gram: DenseMatrix,
    pub exp_gram: DenseMatrix,
    pub d_diag: Vec<f64>,
    pub attention: DenseMatrix,
}

/// Attention of the rows of `x`.
pub fn attention_matrix(x: &MatrixData) -> Result<AttentionPair> {
    if x.rows() == 0 {
        return Err(Error::contract("attention needs at least one row"));
    }
    attention_from_gram(x.gram())
}

pub fn attention_from_gram(gram: DenseMatrix) -> Result<AttentionPair> {
    if !gram.is_square() || gram.rows() == 0 {
        return Err(Error::contract(format!(
            "gram must be square and nonempty, got {:?}",
            gram.shape()
        )));
    }
    let exp_gram = entrywise_exp(&gram)?;
    let n = gram.rows();
    let d_diag: Vec<f64> = (0..n).into_par_iter().map(|i| exp_gram.row(i).iter().sum()).collect();
    let mut attention = exp_gram.clone();
    attention
        .as_mut_slice()
        .par_chunks_mut(n)
        .zip(&d_diag)
        .for_each(|(row, &s)| row.iter_mut().for_each(|v| *v /= s));
    Ok(AttentionPair {
        gram,
        exp_gram,
        d_diag,
        attention,
    })
}

/// `max |a_ij - b_ij| / min(a_ij, b_ij)` over positive matrices.
pub fn exp_relative_error(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dims(
            "exp_relative_error",
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(relative_error(a.as_slice(), b.as_slice()))
}

/// `max |a_i - b_i| / min(a_i, b_i)` over positive vectors.
pub fn rowsum_relative_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("rowsum_relative_error", a.len(), b.len()));
    }
    Ok(relative_error(a, b))
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.min(*y))
        .fold(0.0, f64::max)
}

/// `||D_a^{-1} E_a - D_b^{-1} E_b||_inf`.
pub fn normalized_difference(d_a: &[f64], e_a: &DenseMatrix, d_b: &[f64], e_b: &DenseMatrix) -> Result<f64> {
    let n = d_a.len();
    if e_a.shape() != (n, n) || e_b.shape() != (n, n) || d_b.len() != n {
        return Err(Error::dims(
            "normalized_difference",
            format!("{n}x{n}"),
            format!("{:?} / {:?}", e_a.shape(), e_b.shape()),
        ));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for (x, y) in e_a.row(i).iter().zip(e_b.row(i)) {
            worst = worst.max((x / d_a[i] - y / d_b[i]).abs());
        }
    }
    Ok(worst)
}

/// Measured errors between the attention of `X` and of `Y`, together with
/// the bounds that hold when `(1 - eps) XX^T <= YY^T <= (1 + eps) XX^T`
/// with `eps < 1` and `||XX^T||_inf = r < 0.1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionErrorReport {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub r_measured: f64,
    pub sandwich_holds: bool,
    /// Smallest sandwich factor; infinite (`null` in JSON) when `YY^T`
    /// leaves the range of `XX^T`.
    pub eps_star: f64,
    pub max_entry: f64,
    pub entry_bound: f64,
    pub entry_bound_ok: bool,
    pub exp_rel_err: f64,
    pub exp_bound: f64,
    pub rowsum_rel_err: f64,
    pub rowsum_bound: f64,
    pub attention_inf_err: f64,
    pub attention_bound: f64,
    pub c1: f64,
    pub c2: f64,
    /// Whether the hypotheses of the bounds hold; the per-bound flags are
    /// `None` otherwise.
    pub bounds_applicable: bool,
    pub exp_ok: Option<bool>,
    pub rowsum_ok: Option<bool>,
    pub attention_ok: Option<bool>,
}

impl AttentionErrorReport {
    /// False only if some applicable bound is violated.
    pub fn passes(&self) -> bool {
        self.violations().is_empty()
    }

    /// Names of applicable bounds that fail.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.bounds_applicable && !self.entry_bound_ok {
            out.push("entry_bound");
        }
        for (name, ok) in [
            ("exp_rel_err", self.exp_ok),
            ("rowsum_rel_err", self.rowsum_ok),
            ("attention_inf_err", self.attention_ok),
        ] {
            if ok == Some(false) {
                out.push(name);
            }
        }
        out
    }
}

pub fn verify(x: &InputMatrix, y: &ReducedMatrix, eps: f64) -> Result<AttentionErrorReport> {
    verify_data(x.data(), y.data(), eps)
}

/// Compares `x` (`n x d`) against `y` (`n x m`) for the factor `eps`.
pub fn verify_data(x: &MatrixData, y: &DenseMatrix, eps: f64) -> Result<AttentionErrorReport> {
    if x.rows() != y.rows() {
        return Err(Error::dims(
            "verify",
            format!("{} rows", x.rows()),
            format!("{} rows", y.rows()),
        ));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::contract(format!(
            "eps must be finite and nonnegative, got {eps}"
        )));
    }
    let px = attention_matrix(x)?;
    let py = attention_from_gram(y.gram())?;
    let r = px.gram.inf_norm();
    let sandwich = psd_sandwich_check(&px.gram, &py.gram, eps)?;

    let max_entry = py.gram.inf_norm();
    let entry_bound = (1.0 + sandwich.eps_star) * r + ENTRY_SLACK;
    let entry_bound_ok = max_entry <= entry_bound;
    let exp_rel_err = exp_relative_error(&px.exp_gram, &py.exp_gram)?;
    let rowsum_rel_err = rowsum_relative_error(&px.d_diag, &py.d_diag)?;
    let attention_inf_err = px.attention.max_abs_diff(&py.attention);

    let exp_bound = C_EXP * r;
    let rowsum_bound = C_ROWSUM * r;
    let attention_bound = (C_EXP + C_ROWSUM) * r;
    let bounds_applicable = sandwich.holds && sandwich.eps_star < 1.0 && r < MAX_RADIUS;
    let check = |ok: bool| bounds_applicable.then_some(ok);

    Ok(AttentionErrorReport {
        n: x.rows(),
        m: y.cols(),
        eps,
        r_measured: r,
        sandwich_holds: sandwich.holds,
        eps_star: sandwich.eps_star,
        max_entry,
        entry_bound,
        entry_bound_ok,
        exp_rel_err,
        exp_bound,
        rowsum_rel_err,
        rowsum_bound,
        attention_inf_err,
        attention_bound,
        c1: C_EXP,
        c2: C_ROWSUM,
        bounds_applicable,
        exp_ok: check(exp_rel_err <= exp_bound),
        rowsum_ok: check(rowsum_rel_err <= rowsum_bound),
        attention_ok: check(attention_inf_err <= attention_bound),
    })
}
