#![allow(dead_code)]

//! Independent reference computations: naive loops and Jacobi rotations,
//! sharing no code with the library's kernels.

use atsp_core::DenseMatrix;

pub fn naive_gram(x: &DenseMatrix) -> DenseMatrix {
    let (n, d) = x.shape();
    DenseMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..d {
            s += x[(i, k)] * x[(j, k)];
        }
        s
    })
}

pub fn max_abs(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `D^{-1} exp(G)` with its exponential and row sums, by plain loops.
pub struct NaiveAttention {
    pub exp: Vec<Vec<f64>>,
    pub rowsum: Vec<f64>,
    pub attention: Vec<Vec<f64>>,
}

pub fn naive_attention(g: &DenseMatrix) -> NaiveAttention {
    let n = g.rows();
    let exp: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g[(i, j)].exp()).collect()).collect();
    let rowsum: Vec<f64> = exp.iter().map(|r| r.iter().sum()).collect();
    let attention = exp
        .iter()
        .zip(&rowsum)
        .map(|(r, s)| r.iter().map(|v| v / s).collect())
        .collect();
    NaiveAttention { exp, rowsum, attention }
}

/// Lower Cholesky factor of a positive definite matrix, or `None`.
pub fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if s <= 0.0 {
            return None;
        }
        l[(j, j)] = s.sqrt();
        for i in (j + 1)..n {
            let mut t = a[(i, j)];
            for k in 0..j {
                t -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = t / l[(j, j)];
        }
    }
    Some(l)
}

/// `L^{-1} B L^{-T}` by forward substitution.
pub fn congruence_inverse(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    let solve = |m: &DenseMatrix| {
        let mut out = DenseMatrix::zeros(n, n);
        for c in 0..n {
            for i in 0..n {
                let mut s = m[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * out[(k, c)];
                }
                out[(i, c)] = s / l[(i, i)];
            }
        }
        out
    };
    let half = solve(b);
    solve(&half.transpose())
}

/// Smallest `e` with `(1 - e) A <= B <= (1 + e) A`, for positive definite `A`.
pub fn sandwich_factor(a: &DenseMatrix, b: &DenseMatrix) -> Option<f64> {
    let l = cholesky(a)?;
    let m = congruence_inverse(&l, b);
    let (lo, hi) = jacobi_extreme_eigs(&m.symmetrize());
    Some((1.0 - lo).max(hi - 1.0))
}

/// Smallest and largest eigenvalue by cyclic Jacobi rotations.
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
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
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
        if off < 1e-15 {
            break;
        }
    }
    let d = a.diag();
    (
        d.iter().cloned().fold(f64::INFINITY, f64::min),
        d.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Squared row norms of the left singular vectors of a tall matrix, by
/// one-sided Jacobi, plus the numerical rank.
pub fn svd_leverage(a: &DenseMatrix) -> (Vec<f64>, usize) {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    for _ in 0..100 {
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
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
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
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&k| sigma[k] > 1e-8 * top).collect();
    let scores = (0..m)
        .map(|i| keep.iter().map(|&k| (cols[k][i] / sigma[k]).powi(2)).sum())
        .collect();
    (scores, keep.len())
}
