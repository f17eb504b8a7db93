//! Dense and sparse matrix kernels.
//!
//! All arithmetic is `f64`. Parallel kernels split work across output rows
//! only; every output entry is accumulated sequentially in a fixed order, so
//! results are bit-identical regardless of thread count.

mod dense;
mod eig;
mod psd;
mod qr;
mod sparse;

pub use dense::{dot, entrywise_exp, inf_norm, DenseMatrix, EXP_OVERFLOW_GUARD};
pub use eig::{sym_eig, SymEig};
pub use psd::{psd_sandwich_check, Sandwich, PSD_TOL_REL};
pub use qr::{qr_decompose, qr_r_factor, solve_upper, triangular_rank, Qr};
pub use sparse::SparseMatrix;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Diagonal entries of R, or eigenvalues, below this fraction of the
/// largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// A matrix in either storage layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatrixData {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl MatrixData {
    pub fn rows(&self) -> usize {
        match self {
            MatrixData::Dense(m) => m.rows(),
            MatrixData::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixData::Dense(m) => m.cols(),
            MatrixData::Sparse(m) => m.cols(),
        }
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        match self {
            MatrixData::Dense(m) => m.count_nonzero(),
            MatrixData::Sparse(m) => m.nnz(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, MatrixData::Sparse(_))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            MatrixData::Dense(m) => m.clone(),
            MatrixData::Sparse(m) => m.to_dense(),
        }
    }

    pub fn transpose(&self) -> MatrixData {
        match self {
            MatrixData::Dense(m) => MatrixData::Dense(m.transpose()),
            MatrixData::Sparse(m) => MatrixData::Sparse(m.transpose()),
        }
    }

    /// `self * self^T`. Dense and sparse layouts give identical bits.
    pub fn gram(&self) -> DenseMatrix {
        match self {
            MatrixData::Dense(m) => m.gram(),
            MatrixData::Sparse(m) => m.gram(),
        }
    }

    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            MatrixData::Dense(m) => m.matmul(b),
            MatrixData::Sparse(m) => m.matmul_dense(b),
        }
    }

    /// Row `i` scattered into a dense vector.
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match self {
            MatrixData::Dense(m) => m.row(i).to_vec(),
            MatrixData::Sparse(m) => {
                let mut out = vec![0.0; m.cols()];
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    out[j] = v;
                }
                out
            }
        }
    }

    /// Calls `f(j, value)` for each stored entry of row `i`, in ascending `j`.
    /// Dense rows visit every entry, zeros included.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            MatrixData::Dense(m) => {
                for (j, &v) in m.row(i).iter().enumerate() {
                    f(j, v);
                }
            }
            MatrixData::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    f(j, v);
                }
            }
        }
    }
}

impl From<DenseMatrix> for MatrixData {
    fn from(m: DenseMatrix) -> Self {
        MatrixData::Dense(m)
    }
}

impl From<SparseMatrix> for MatrixData {
    fn from(m: SparseMatrix) -> Self {
        MatrixData::Sparse(m)
    }
}
