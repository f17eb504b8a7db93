use std::fmt;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Wraps a row-major buffer. Rejects wrong lengths and non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "from_row_major",
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::dims(
                "from_rows",
                format!("{m} columns"),
                format!("{} columns in row {bad}", rows[bad].len()),
            ));
        }
        Self::from_row_major(n, m, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        if let Some(bad) = columns.iter().position(|c| c.len() != rows) {
            return Err(Error::dims(
                "from_columns",
                format!("{rows} rows"),
                format!("{} rows in column {bad}", columns[bad].len()),
            ));
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                op,
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self * b`. Each output entry is accumulated sequentially over the
    /// inner index in ascending order, so results do not depend on the
    /// number of worker threads.
    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows {
            return Err(Error::dims(
                "matmul",
                format!("inner dimension {}", self.cols),
                format!("inner dimension {}", b.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols);
        if b.cols == 0 {
            return Ok(out);
        }
        out.data.par_chunks_mut(b.cols).enumerate().for_each(|(i, out_row)| {
            for (k, &a_ik) in self.row(i).iter().enumerate() {
                for (o, &b_kj) in out_row.iter_mut().zip(b.row(k)) {
                    *o += a_ik * b_kj;
                }
            }
        });
        Ok(out)
    }

    /// `self * v` for a column vector.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::dims("matvec", self.cols, v.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `self * self^T`, symmetric by construction: the upper triangle is
    /// computed and mirrored, which is bitwise the same as averaging with
    /// the transpose.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.rows;
        let mut g = DenseMatrix::zeros(n, n);
        g.data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, g_row)| {
            for (j, g) in g_row.iter_mut().enumerate().skip(i) {
                *g = dot(self.row(i), self.row(j));
            }
        });
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        Self::from_fn(n, n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
}

/// Sequential dot product, ascending index order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Largest absolute entry.
pub fn inf_norm(m: &DenseMatrix) -> f64 {
    m.inf_norm()
}

/// Entries above this overflow-guard threshold are rejected by [`entrywise_exp`].
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;

/// Entrywise `exp`.
pub fn entrywise_exp(m: &DenseMatrix) -> Result<DenseMatrix> {
    if let Some(pos) = m.data.iter().position(|&v| v > EXP_OVERFLOW_GUARD) {
        return Err(Error::contract(format!(
            "entrywise_exp overflow: entry ({}, {}) = {} exceeds {}",
            pos / m.cols,
            pos % m.cols,
            m.data[pos],
            EXP_OVERFLOW_GUARD
        )));
    }
    Ok(m.map(f64::exp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        DenseMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn identity_times_b() {
        let b = lcg_matrix(3, 5, 1);
        assert_eq!(DenseMatrix::identity(3).matmul(&b).unwrap(), b);
    }

    #[test]
    fn zero_times_b() {
        let b = lcg_matrix(4, 2, 2);
        let z = DenseMatrix::zeros(3, 4).matmul(&b).unwrap();
        assert_eq!(z, DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn matmul_matches_triple_loop_bitwise() {
        let a = lcg_matrix(3, 4, 3);
        let b = lcg_matrix(4, 2, 4);
        let c = a.matmul(&b).unwrap();
        let o = naive(&a, &b);
        for (x, y) in c.as_slice().iter().zip(o.as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gram_examples() {
        let x = DenseMatrix::identity(2).scale(2.0);
        assert_eq!(
            x.gram(),
            DenseMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 4.0]]).unwrap()
        );
        let row = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(row.gram().as_slice(), &[3.0]);
    }

    #[test]
    fn gram_matches_naive() {
        let x = lcg_matrix(4, 64, 5);
        let g = x.gram();
        let o = naive(&x, &x.transpose());
        assert!(g.max_abs_diff(&o) <= 1e-12);
        assert_eq!(g.asymmetry(), 0.0);
    }

    #[test]
    fn gram_is_thread_count_invariant() {
        let x = lcg_matrix(24, 300, 6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let g1 = one.install(|| x.gram());
        let g4 = four.install(|| x.gram());
        let m1 = one.install(|| x.matmul(&x.transpose()).unwrap());
        let m4 = four.install(|| x.matmul(&x.transpose()).unwrap());
        assert_eq!(g1, g4);
        assert_eq!(m1, m4);
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(DenseMatrix::zeros(3, 3).inf_norm(), 0.0);
        let m = DenseMatrix::from_rows(&[vec![-3.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(inf_norm(&m), 3.0);
        let r = lcg_matrix(7, 9, 7);
        let scan = r.as_slice().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert_eq!(r.inf_norm(), scan);
    }

    #[test]
    fn exp_examples() {
        let ones = entrywise_exp(&DenseMatrix::zeros(2, 3)).unwrap();
        assert!(ones.as_slice().iter().all(|&v| v == 1.0));
        let l2 = entrywise_exp(&DenseMatrix::from_rows(&[vec![2f64.ln()]]).unwrap()).unwrap();
        assert!((l2[(0, 0)] - 2.0).abs() < 1e-15);
        let m = DenseMatrix::from_rows(&[vec![0.05, 0.02], vec![0.02, 0.05]]).unwrap();
        let e = entrywise_exp(&m).unwrap();
        assert!((e[(0, 0)] - 1.051271).abs() < 1e-6);
        assert!((e[(0, 1)] - 1.020201).abs() < 1e-6);
        assert_eq!(e[(0, 1)], e[(1, 0)]);
    }

    #[test]
    fn exp_overflow_rejected() {
        let m = DenseMatrix::from_rows(&[vec![701.0]]).unwrap();
        assert!(matches!(entrywise_exp(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_major(1, 2, vec![1.0]).is_err());
    }
}
