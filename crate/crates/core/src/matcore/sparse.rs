use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and every stored value is nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicates are summed and resulting zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::contract(format!("triplet ({i}, {j}) outside {rows}x{cols}")));
            }
            if !v.is_finite() {
                return Err(Error::contract(format!("non-finite value at ({i}, {j})")));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        for i in 0..rows {
            while k < sorted.len() && sorted[k].0 == i {
                let j = sorted[k].1;
                let mut v = 0.0;
                while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                    v += sorted[k].2;
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in ascending order, so each transposed row ends up sorted.
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let p = next[j];
                col_idx[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self * b`; entry `(i, j)` accumulates over the stored columns of
    /// row `i` in ascending order.
    pub fn matmul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows() {
            return Err(Error::dims(
                "sparse matmul",
                format!("inner dimension {}", self.cols),
                format!("inner dimension {}", b.rows()),
            ));
        }
        let bc = b.cols();
        let mut out = vec![0.0; self.rows * bc];
        if bc > 0 {
            out.par_chunks_mut(bc).enumerate().for_each(|(i, out_row)| {
                let (idx, val) = self.row(i);
                for (&k, &a_ik) in idx.iter().zip(val) {
                    for (o, &b_kj) in out_row.iter_mut().zip(b.row(k)) {
                        *o += a_ik * b_kj;
                    }
                }
            });
        }
        DenseMatrix::from_row_major(self.rows, bc, out)
    }

    /// `self * self^T` via sorted-index merges. Skipped terms are exact
    /// zeros, so the result is bitwise equal to the dense computation.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.rows;
        let mut g = vec![0.0; n * n];
        g.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, g_row)| {
            for (j, slot) in g_row.iter_mut().enumerate().skip(i) {
                *slot = self.row_dot(i, j);
            }
        });
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        DenseMatrix::from_row_major(n, n, g).expect("gram of finite matrix is finite")
    }

    fn row_dot(&self, a: usize, b: usize) -> f64 {
        let (ia, va) = self.row(a);
        let (ib, vb) = self.row(b);
        let (mut p, mut q) = (0, 0);
        let mut s = 0.0;
        while p < ia.len() && q < ib.len() {
            match ia[p].cmp(&ib[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    s += va[p] * vb[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        s
    }

    /// Checks the CSR structural invariants.
    pub fn check_invariants(&self) -> bool {
        if self.row_ptr.len() != self.rows + 1 || *self.row_ptr.last().unwrap_or(&0) != self.nnz() {
            return false;
        }
        (0..self.rows).all(|i| {
            let (idx, val) = self.row(i);
            idx.windows(2).all(|w| w[0] < w[1])
                && idx.iter().all(|&j| j < self.cols)
                && val.iter().all(|&v| v != 0.0 && v.is_finite())
        })
    }
}
