//! Synthetic instances with a prescribed `||XX^T||_inf`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use atsp_core::matcore::{DenseMatrix, MatrixData, SparseMatrix};
use atsp_core::rng;
use atsp_core::sparsifier::{InputMatrix, MAX_RADIUS};

use crate::error::{CliError, Result};

/// Gaussian `n x d` matrix (entries kept with probability `density`),
/// rescaled by one scalar so that `||XX^T||_inf` equals `r_target` up to
/// rounding and never exceeds it. Dense storage when `density == 1`.
pub fn generate(n: usize, d: usize, r_target: f64, density: f64, seed: u64) -> Result<InputMatrix> {
    if n == 0 || n > d {
        return Err(CliError::Usage(format!(
            "generate needs 1 <= n <= d, got n = {n}, d = {d}"
        )));
    }
    if !(r_target > 0.0 && r_target < MAX_RADIUS) {
        return Err(CliError::Usage(format!(
            "r must lie in (0, {MAX_RADIUS}), got {r_target}"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(CliError::Usage(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = rng::stream(seed, "generate");
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let raw = if density == 1.0 {
        MatrixData::Dense(DenseMatrix::from_fn(n, d, |_, _| normal()))
    } else {
        let mut coin = rng::stream(seed, "generate/mask");
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..d {
                if coin.random::<f64>() < density {
                    trip.push((i, j, normal()));
                }
            }
        }
        MatrixData::Sparse(SparseMatrix::from_triplets(n, d, &trip)?)
    };
    let top = raw.gram().inf_norm();
    if top == 0.0 {
        return Err(CliError::Usage("generated matrix is zero; raise the density".into()));
    }
    let mut scale = (r_target / top).sqrt();
    loop {
        let x = rescale(&raw, scale);
        let r = x.gram().inf_norm();
        if r <= r_target {
            return Ok(InputMatrix::new_unvalidated(x, r_target)?);
        }
        scale = scale.next_down();
    }
}

fn rescale(m: &MatrixData, s: f64) -> MatrixData {
    match m {
        MatrixData::Dense(d) => MatrixData::Dense(d.scale(s)),
        MatrixData::Sparse(sp) => {
            let mut trip = Vec::with_capacity(sp.nnz());
            for i in 0..sp.rows() {
                let (idx, val) = sp.row(i);
                trip.extend(idx.iter().zip(val).map(|(&j, &v)| (i, j, v * s)));
            }
            MatrixData::Sparse(
                SparseMatrix::from_triplets(sp.rows(), sp.cols(), &trip).expect("rescaled entries stay valid"),
            )
        }
    }
}
