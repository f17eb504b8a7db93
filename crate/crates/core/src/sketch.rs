//! Seeded sketching transforms: sparse embedding, Gaussian, and AMS.
//!
//! A sketch with `out_dim` rows and `in_dim` columns compresses vectors of
//! length `in_dim`. [`apply_left`] sketches the columns of a matrix;
//! [`apply_right`] sketches its rows, i.e. multiplies by the transposed
//! sketch, which is how the `n x s2` JL factor of the leverage estimator is
//! realized.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, MatrixData, SparseMatrix};
use crate::rng;

/// Mersenne prime 2^61 - 1, the field for the AMS polynomial hash.
pub const AMS_PRIME: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchKind {
    SparseEmbedding,
    Gaussian,
    Ams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub out_dim: usize,
    pub in_dim: usize,
    /// Nonzeros per column; sparse embedding only.
    pub nnz_per_column: usize,
    /// Entry scale; Gaussian only.
    pub scale: f64,
    pub seed: u64,
}

impl SketchSpec {
    pub fn sparse_embedding(out_dim: usize, in_dim: usize, s: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::SparseEmbedding,
            out_dim,
            in_dim,
            nnz_per_column: s,
            scale: 1.0,
            seed,
        }
    }

    pub fn gaussian(out_dim: usize, in_dim: usize, scale: f64, seed: u64) -> Self {
        Self {
            kind: SketchKind::Gaussian,
            out_dim,
            in_dim,
            nnz_per_column: out_dim,
            scale,
            seed,
        }
    }

    pub fn ams(out_dim: usize, in_dim: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::Ams,
            out_dim,
            in_dim,
            nnz_per_column: out_dim,
            scale: 1.0 / (out_dim as f64).sqrt(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_dim == 0 || self.in_dim == 0 {
            return Err(Error::contract(format!(
                "sketch dimensions must be positive, got {}x{}",
                self.out_dim, self.in_dim
            )));
        }
        match self.kind {
            SketchKind::SparseEmbedding if self.nnz_per_column == 0 || self.nnz_per_column > self.out_dim => {
                Err(Error::contract(format!(
                    "sparse embedding needs 1 <= s <= out_dim, got s = {} with out_dim = {}",
                    self.nnz_per_column, self.out_dim
                )))
            }
            SketchKind::Gaussian if !(self.scale.is_finite() && self.scale > 0.0) => Err(Error::contract(format!(
                "gaussian scale must be positive, got {}",
                self.scale
            ))),
            _ => Ok(()),
        }
    }
}

/// A realized sketch. Sparse embeddings are stored in CSR form, the other
/// kinds densely.
#[derive(Clone, Debug)]
pub struct SketchMatrix {
    pub spec: SketchSpec,
    entries: MatrixData,
    ams_coeffs: Vec<[u64; 4]>,
}

impl SketchMatrix {
    pub fn rows(&self) -> usize {
        self.spec.out_dim
    }

    pub fn cols(&self) -> usize {
        self.spec.in_dim
    }

    pub fn entries(&self) -> &MatrixData {
        &self.entries
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.entries.to_dense()
    }

    /// Hash coefficients `(a0, a1, a2, a3)` of each AMS row; empty otherwise.
    pub fn ams_coefficients(&self) -> &[[u64; 4]] {
        &self.ams_coeffs
    }
}

/// Realizes a sketch; a pure function of the spec (including its seed).
pub fn make_sketch(spec: SketchSpec) -> Result<SketchMatrix> {
    spec.validate()?;
    match spec.kind {
        SketchKind::SparseEmbedding => Ok(SketchMatrix {
            spec,
            entries: MatrixData::Sparse(sparse_embedding(&spec)?),
            ams_coeffs: Vec::new(),
        }),
        SketchKind::Gaussian => {
            let mut rng = rng::stream(spec.seed, "sketch/gaussian");
            let data: Vec<f64> = (0..spec.out_dim * spec.in_dim)
                .map(|_| spec.scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>();
            Ok(SketchMatrix {
                spec,
                entries: MatrixData::Dense(DenseMatrix::from_row_major(spec.out_dim, spec.in_dim, data)?),
                ams_coeffs: Vec::new(),
            })
        }
        SketchKind::Ams => {
            let coeffs: Vec<[u64; 4]> = (0..spec.out_dim)
                .map(|i| {
                    let mut rng = rng::substream(spec.seed, "sketch/ams", i as u64);
                    [0; 4].map(|_| rng.random_range(0..AMS_PRIME))
                })
                .collect();
            let scale = 1.0 / (spec.out_dim as f64).sqrt();
            let dense = DenseMatrix::from_fn(spec.out_dim, spec.in_dim, |i, j| ams_sign(&coeffs[i], j as u64) * scale);
            Ok(SketchMatrix {
                spec,
                entries: MatrixData::Dense(dense),
                ams_coeffs: coeffs,
            })
        }
    }
}

/// `(a0 + a1 x + a2 x^2 + a3 x^3) mod p`, evaluated by Horner's rule.
pub fn ams_hash(coeffs: &[u64; 4], x: u64) -> u64 {
    let p = AMS_PRIME as u128;
    let x = x as u128 % p;
    let mut acc: u128 = 0;
    for &c in coeffs.iter().rev() {
        acc = (acc * x + c as u128) % p;
    }
    acc as u64
}

/// `+1` if the low bit of the hash is set, `-1` otherwise.
pub fn ams_sign(coeffs: &[u64; 4], x: u64) -> f64 {
    if ams_hash(coeffs, x) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Each column `j` draws its `s` row positions by a partial Fisher-Yates
/// shuffle of `0..out_dim` on substream `j`, followed by one sign bit per
/// position. Only the swapped slots of the virtual permutation are stored.
fn sparse_embedding(spec: &SketchSpec) -> Result<SparseMatrix> {
    let s = spec.nnz_per_column;
    let value = 1.0 / (s as f64).sqrt();
    let columns: Vec<Vec<(usize, f64)>> = (0..spec.in_dim)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::substream(spec.seed, "sketch/sparse-embedding", j as u64);
            let mut swapped: Vec<(usize, usize)> = Vec::with_capacity(2 * s);
            let lookup =
                |sw: &[(usize, usize)], k: usize| sw.iter().rev().find(|(pos, _)| *pos == k).map_or(k, |&(_, v)| v);
            let mut picks = Vec::with_capacity(s);
            for t in 0..s {
                let r = rng.random_range(t..spec.out_dim);
                let at_r = lookup(&swapped, r);
                let at_t = lookup(&swapped, t);
                swapped.push((r, at_t));
                swapped.push((t, at_r));
                picks.push(at_r);
            }
            let mut col: Vec<(usize, f64)> = picks
                .into_iter()
                .map(|row| {
                    let sign = if rng.next_u32() & 1 == 1 { 1.0 } else { -1.0 };
                    (row, sign * value)
                })
                .collect();
            col.sort_by_key(|e| e.0);
            col
        })
        .collect();

    let triplets: Vec<(usize, usize, f64)> = columns
        .iter()
        .enumerate()
        .flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v)))
        .collect();
    SparseMatrix::from_triplets(spec.out_dim, spec.in_dim, &triplets)
}

/// `left * right` with row-parallel, fixed-order accumulation: output row
/// `k` sums `left[k, j] * right[j, :]` over the stored `j` in ascending order.
pub(crate) fn mul_rows(left: &MatrixData, right: &MatrixData) -> DenseMatrix {
    debug_assert_eq!(left.cols(), right.rows());
    let cols = right.cols();
    let mut out = vec![0.0; left.rows() * cols];
    if cols > 0 {
        out.par_chunks_mut(cols).enumerate().for_each(|(k, buf)| {
            left.for_each_in_row(k, |j, lv| {
                if lv != 0.0 {
                    right.for_each_in_row(j, |c, rv| buf[c] += lv * rv);
                }
            });
        });
    }
    DenseMatrix::from_row_major(left.rows(), cols, out).expect("product of finite matrices")
}

/// `sk * a`.
pub fn apply_left(sk: &SketchMatrix, a: &MatrixData) -> Result<DenseMatrix> {
    if a.rows() != sk.cols() {
        return Err(Error::dims(
            "apply_left",
            format!("{} rows", sk.cols()),
            format!("{} rows", a.rows()),
        ));
    }
    Ok(mul_rows(&sk.entries, a))
}

/// `a * sk^T`: sketches each row of `a` from length `in_dim` to `out_dim`.
pub fn apply_right(a: &DenseMatrix, sk: &SketchMatrix) -> Result<DenseMatrix> {
    if a.cols() != sk.cols() {
        return Err(Error::dims(
            "apply_right",
            format!("{} columns", sk.cols()),
            format!("{} columns", a.cols()),
        ));
    }
    let at = MatrixData::Dense(a.transpose());
    Ok(mul_rows(&sk.entries, &at).transpose())
}
