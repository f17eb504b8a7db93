//! Feature-dimension reduction for symmetric softmax attention.
//!
//! Given `X` with `n` rows and `d >> n` columns and `||XX^T||_inf <= r`,
//! the sparsifiers produce `Y` with `m` columns (near-linear in `n`) such
//! that `YY^T` spectrally approximates `XX^T`. The [`attention`] module
//! measures how far `D(Y)^{-1} exp(YY^T)` then is from `D(X)^{-1} exp(XX^T)`
//! and checks the result against the `O(r)` entrywise bounds.

pub mod attention;
pub mod error;
pub mod leverage;
pub mod matcore;
pub mod rng;
pub mod sketch;
pub mod sparsifier;

pub use attention::{attention_matrix, verify, verify_data, AttentionErrorReport, AttentionPair};
pub use error::{Error, Result};
pub use matcore::{DenseMatrix, MatrixData, SparseMatrix};
pub use sparsifier::{sparsify_deterministic, sparsify_randomized, InputMatrix, Method, ReducedMatrix};
