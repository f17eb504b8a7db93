#![allow(dead_code)]

use atsp_core::matcore::{DenseMatrix, MatrixData, SparseMatrix};
use atsp_core::sparsifier::InputMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut r))
}

/// Gaussian `n x d` rescaled so that `||XX^T||_inf = radius`.
pub fn scaled_gaussian(n: usize, d: usize, radius: f64, seed: u64) -> DenseMatrix {
    let x = gaussian(n, d, seed);
    let top = naive_gram(&x).inf_norm();
    x.scale((radius / top).sqrt())
}

/// Wraps `x` without checking the norm bound; the pipelines do not read it.
pub fn input(x: DenseMatrix) -> InputMatrix {
    InputMatrix::new_unvalidated(MatrixData::Dense(x), 0.05).unwrap()
}

pub fn sparse_random(rows: usize, cols: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut r = rng(seed);
    let mut trip = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if r.random::<f64>() < density {
                trip.push((i, j, r.random::<f64>() * 2.0 - 1.0));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, &trip).unwrap()
}

pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut s = 0.0;
        for k in 0..a.cols() {
            s += a[(i, k)] * b[(k, j)];
        }
        s
    })
}

pub fn naive_gram(x: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(x.rows(), x.rows(), |i, j| {
        x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum()
    })
}

/// Left singular vectors and singular values of a tall matrix by one-sided
/// Jacobi rotations.
pub fn jacobi_svd(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    (*x, *y) = (c * *x - s * *y, s * *x + c * *y);
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let sigma: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let u = DenseMatrix::from_fn(m, n, |i, j| if sigma[j] > 0.0 { cols[j][i] / sigma[j] } else { 0.0 });
    (u, sigma)
}

/// Row norms of the left singular vectors spanning the numerical range.
pub fn svd_leverage(a: &DenseMatrix) -> Vec<f64> {
    let (u, sigma) = jacobi_svd(a);
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > 1e-8 * top).collect();
    (0..a.rows())
        .map(|i| keep.iter().map(|&k| u[(i, k)] * u[(i, k)]).sum())
        .collect()
}

/// Smallest and largest eigenvalue by Jacobi rotations on a symmetric matrix.
pub fn jacobi_extreme_eigs(m: &DenseMatrix) -> (f64, f64) {
    let n = m.rows();
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let d = a.diag();
    (
        d.iter().cloned().fold(f64::INFINITY, f64::min),
        d.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}
