//! Loewner-order comparisons between symmetric matrices.

use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::eig::sym_eig;
use crate::error::{Error, Result};

/// Relative slack used when deciding whether a matrix is PSD.
pub const PSD_TOL_REL: f64 = 1e-9;

/// Outcome of comparing `b` against the band `[(1-eps) a, (1+eps) a]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// Both `(1+eps)a - b` and `b - (1-eps)a` have smallest eigenvalue
    /// at least `-PSD_TOL_REL * ||a||_inf`.
    pub holds: bool,
    /// Smallest factor for which the band contains `b`; infinite when `b`
    /// has mass outside the range of `a`.
    pub eps_star: f64,
}

fn check_pair(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::dims(
            "psd_sandwich_check",
            format!("{:?} square", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    for (name, m) in [("a", a), ("b", b)] {
        if m.asymmetry() > 1e-12 * m.inf_norm().max(1.0) {
            return Err(Error::contract(format!("psd_sandwich_check: {name} is not symmetric")));
        }
    }
    Ok(())
}

/// Checks `(1-eps) a <= b <= (1+eps) a` in the Loewner order and computes
/// the tightest factor from the pencil `(b, a)` restricted to range(a).
pub fn psd_sandwich_check(a: &DenseMatrix, b: &DenseMatrix, eps: f64) -> Result<Sandwich> {
    check_pair(a, b)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::contract(format!("eps must be nonnegative, got {eps}")));
    }
    if a == b {
        return Ok(Sandwich {
            holds: true,
            eps_star: 0.0,
        });
    }
    let tol = PSD_TOL_REL * a.inf_norm();

    let upper = a.scale(1.0 + eps).sub(b)?;
    let lower = b.sub(&a.scale(1.0 - eps))?;
    let holds = sym_eig(&upper)?.min() >= -tol && sym_eig(&lower)?.min() >= -tol;

    Ok(Sandwich {
        holds,
        eps_star: sandwich_factor(a, b, tol)?,
    })
}

fn sandwich_factor(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> Result<f64> {
    let n = a.rows();
    let ea = sym_eig(a)?;
    let range = ea.range_indices();

    // Projection of b onto the null space of a must vanish.
    let mut proj = DenseMatrix::identity(n);
    for &k in &range {
        for i in 0..n {
            for j in 0..n {
                proj[(i, j)] -= ea.vectors[(i, k)] * ea.vectors[(j, k)];
            }
        }
    }
    if range.len() < n {
        let outside = proj.matmul(b)?.matmul(&proj)?.symmetrize();
        let e = sym_eig(&outside)?;
        if e.max().abs().max(e.min().abs()) > tol {
            return Ok(f64::INFINITY);
        }
    }
    if range.is_empty() {
        return Ok(0.0);
    }

    // W = Lambda_r^{-1/2} V_r^T, whitened pencil C = W b W^T.
    let r = range.len();
    let w = DenseMatrix::from_fn(r, n, |p, i| {
        let k = range[p];
        ea.vectors[(i, k)] / ea.values[k].sqrt()
    });
    let c = w.matmul(b)?.matmul(&w.transpose())?.symmetrize();
    let ec = sym_eig(&c)?;
    Ok((ec.max() - 1.0).max(1.0 - ec.min()).max(0.0))
}
