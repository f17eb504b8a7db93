//! Householder QR for tall matrices.

use super::dense::DenseMatrix;
use super::RANK_TOL;
use crate::error::{Error, Result};

/// Thin QR factors: `q` is `rows x cols` with orthonormal columns and `r`
/// is `cols x cols` upper-triangular with a nonnegative diagonal.
#[derive(Clone, Debug)]
pub struct Qr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl Qr {
    /// Number of diagonal entries of `r` above `RANK_TOL` times the largest.
    pub fn rank(&self) -> usize {
        triangular_rank(&self.r)
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank() < self.r.rows()
    }
}

/// Diagonal entries of `r` above `RANK_TOL` times the largest magnitude.
pub fn triangular_rank(r: &DenseMatrix) -> usize {
    let diag = r.diag();
    let top = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    diag.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

/// Working state: the matrix stored column-major, plus the Householder
/// vectors (`None` where no reflection was needed).
struct Householder {
    rows: usize,
    cols: Vec<Vec<f64>>,
    reflectors: Vec<Option<Vec<f64>>>,
}

fn factor(m: &DenseMatrix) -> Householder {
    let (rows, ncols) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..ncols).map(|j| m.column(j)).collect();
    let mut reflectors = Vec::with_capacity(ncols);

    for k in 0..ncols {
        let (head, tail) = cols.split_at_mut(k + 1);
        let col = &mut head[k][k..];
        let x0 = col[0];
        let sub_sq: f64 = col[1..].iter().map(|v| v * v).sum();
        if sub_sq == 0.0 {
            reflectors.push(None);
            continue;
        }
        let norm = (x0 * x0 + sub_sq).sqrt();
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let beta = 2.0 / vnorm2;

        col[0] = alpha;
        for x in col[1..].iter_mut() {
            *x = 0.0;
        }
        for other in tail.iter_mut() {
            let seg = &mut other[k..];
            let w: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
            let f = beta * w;
            for (s, vi) in seg.iter_mut().zip(&v) {
                *s -= f * vi;
            }
        }
        reflectors.push(Some(v));
    }
    Householder { rows, cols, reflectors }
}

fn extract_r(h: &Householder) -> DenseMatrix {
    let n = h.cols.len();
    DenseMatrix::from_fn(n, n, |i, j| if i <= j { h.cols[j][i] } else { 0.0 })
}

/// Householder QR of a tall matrix (`rows >= cols`).
///
/// Rank deficiency is not an error here; callers inspect [`Qr::rank`].
pub fn qr_decompose(m: &DenseMatrix) -> Result<Qr> {
    let (rows, ncols) = m.shape();
    if rows < ncols {
        return Err(Error::contract(format!(
            "qr_decompose needs rows >= cols, got {rows}x{ncols}"
        )));
    }
    let h = factor(m);
    let mut r = extract_r(&h);

    // Q = H_0 H_1 ... H_{n-1} [I; 0], applied right to left.
    let mut q_cols: Vec<Vec<f64>> = (0..ncols)
        .map(|j| {
            let mut c = vec![0.0; rows];
            c[j] = 1.0;
            c
        })
        .collect();
    for (k, refl) in h.reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        let beta = 2.0 / v.iter().map(|x| x * x).sum::<f64>();
        for c in q_cols.iter_mut() {
            let seg = &mut c[k..];
            let w: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
            if w != 0.0 {
                let f = beta * w;
                for (s, vi) in seg.iter_mut().zip(v) {
                    *s -= f * vi;
                }
            }
        }
    }

    for k in 0..ncols {
        if r[(k, k)] < 0.0 {
            for j in k..ncols {
                r[(k, j)] = -r[(k, j)];
            }
            for x in q_cols[k].iter_mut() {
                *x = -*x;
            }
        }
    }
    let q = DenseMatrix::from_fn(h.rows, ncols, |i, j| q_cols[j][i]);
    Ok(Qr { q, r })
}

/// Only the triangular factor, with the same sign convention as
/// [`qr_decompose`]. Skips forming `Q`.
pub fn qr_r_factor(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.rows() < m.cols() {
        return Err(Error::contract(format!(
            "qr_r_factor needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let mut r = extract_r(&factor(m));
    let n = r.rows();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
        }
    }
    Ok(r)
}

/// Solves `r * x = b` for upper-triangular `r`, column by column of `b`.
pub fn solve_upper(r: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = r.rows();
    if !r.is_square() || b.rows() != n {
        return Err(Error::dims(
            "solve_upper",
            format!("{n}x{n} system"),
            format!("{:?} with rhs {:?}", r.shape(), b.shape()),
        ));
    }
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= r[(i, k)] * x[(k, col)];
            }
            let d = r[(i, i)];
            if d == 0.0 {
                return Err(Error::contract("singular triangular system"));
            }
            x[(i, col)] = s / d;
        }
    }
    Ok(x)
}
