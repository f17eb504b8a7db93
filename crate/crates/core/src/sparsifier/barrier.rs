//! Two-barrier greedy selection for an isotropic family `sum v_i v_i^T = I`.
//!
//! The running sum `A` is kept strictly between a lower barrier `l` and an
//! upper barrier `u`. Each step shifts both barriers and adds `t v v^T` for
//! the vector whose lower quotient `L(v)` most exceeds its upper quotient
//! `U(v)`, with `1/t` at the midpoint of `[U, L]`. With `k` dimensions and
//! `q` steps per dimension, `k q` steps leave `u / l` close enough to 1
//! that rescaling gives `(1 - eps) I <= sum w_i v_i v_i^T <= (1 + eps) I`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{psd_sandwich_check, sym_eig, DenseMatrix, SymEig};

const ISOTROPY_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;
const POTENTIAL_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BssConfig {
    /// Steps per dimension are `c_bss * ceil(eps^-2)`, which also bounds the
    /// number of nonzero weights by `c_bss * ceil(eps^-2) * k`.
    pub c_bss: f64,
}

impl Default for BssConfig {
    fn default() -> Self {
        Self { c_bss: 9.0 }
    }
}

/// `c_bss * ceil(eps^-2)`, rounded up.
pub fn steps_per_dimension(eps: f64, c_bss: f64) -> usize {
    (c_bss * (1.0 / (eps * eps)).ceil()).ceil() as usize
}

/// Selection state after some number of steps.
#[derive(Clone, Debug, PartialEq)]
pub struct BssState {
    pub matrix: DenseMatrix,
    pub lower: f64,
    pub upper: f64,
    pub weights: Vec<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BssOutcome {
    /// Final, rescaled weights; one per input vector.
    pub weights: Vec<f64>,
    /// `eps_star` of the final sum against the identity.
    pub eps_achieved: f64,
    pub steps: usize,
    pub nonzero: usize,
}

struct Schedule {
    lower_step: f64,
    upper_step: f64,
    lower_potential0: f64,
    upper_potential0: f64,
}

impl Schedule {
    fn new(k: usize, q: usize) -> (Self, f64, f64) {
        let q = q as f64;
        let sq = q.sqrt();
        let eps_l = 1.0 / sq;
        let eps_u = (sq - 1.0) / (q + sq);
        let s = Self {
            lower_step: 1.0,
            upper_step: (sq + 1.0) / (sq - 1.0),
            lower_potential0: eps_l,
            upper_potential0: eps_u,
        };
        (s, -(k as f64) / eps_l, k as f64 / eps_u)
    }
}

/// Worst-case `eps` reachable with `q` steps per dimension.
fn guaranteed_eps(q: usize) -> f64 {
    let q = q as f64;
    2.0 * q.sqrt() / (q + 1.0)
}

fn upper_potential(values: &[f64], u: f64) -> f64 {
    values.iter().map(|l| 1.0 / (u - l)).sum()
}

fn lower_potential(values: &[f64], l: f64) -> f64 {
    values.iter().map(|v| 1.0 / (v - l)).sum()
}

impl BssState {
    fn new(k: usize, d: usize, lower: f64, upper: f64) -> Self {
        Self {
            matrix: DenseMatrix::zeros(k, k),
            lower,
            upper,
            weights: vec![0.0; d],
            steps: 0,
        }
    }

    fn check(&self, eig: &SymEig, sched: &Schedule) -> Result<()> {
        let (lo, hi) = (eig.min(), eig.max());
        if !(self.lower < lo && hi < self.upper) {
            return Err(Error::Invariant(format!(
                "barrier crossed at step {}: l = {}, spectrum [{lo}, {hi}], u = {}",
                self.steps, self.lower, self.upper
            )));
        }
        let pu = upper_potential(&eig.values, self.upper);
        let pl = lower_potential(&eig.values, self.lower);
        if pu > sched.upper_potential0 * (1.0 + POTENTIAL_SLACK)
            || pl > sched.lower_potential0 * (1.0 + POTENTIAL_SLACK)
        {
            return Err(Error::Invariant(format!(
                "potential increased at step {}: upper {pu} (start {}), lower {pl} (start {})",
                self.steps, sched.upper_potential0, sched.lower_potential0
            )));
        }
        Ok(())
    }
}

/// [`bss_select_with`] under the default configuration.
pub fn bss_select(vectors: &DenseMatrix, eps: f64) -> Result<BssOutcome> {
    bss_select_with(vectors, eps, &BssConfig::default())
}

/// Weights for the rows of `vectors` (`d x k`, with `V^T V = I_k`).
pub fn bss_select_with(vectors: &DenseMatrix, eps: f64, cfg: &BssConfig) -> Result<BssOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::contract(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (d, k) = vectors.shape();
    if k == 0 {
        return Err(Error::contract("vectors must have positive dimension"));
    }
    let residual = vectors
        .transpose()
        .matmul(vectors)?
        .max_abs_diff(&DenseMatrix::identity(k));
    if residual > ISOTROPY_TOL {
        return Err(Error::contract(format!(
            "vectors are not isotropic: residual {residual:e}"
        )));
    }
    let q = steps_per_dimension(eps, cfg.c_bss);
    if q < 2 || guaranteed_eps(q) > eps {
        return Err(Error::contract(format!(
            "c_bss = {} gives {q} steps per dimension, too few for eps = {eps}",
            cfg.c_bss
        )));
    }

    let total_steps = q * k;
    let check_every = if cfg!(debug_assertions) {
        1
    } else {
        total_steps.div_ceil(100)
    };
    let (sched, l0, u0) = Schedule::new(k, q);
    let mut state = BssState::new(k, d, l0, u0);
    let norms: Vec<f64> = (0..d).map(|i| vectors.row(i).iter().map(|v| v * v).sum()).collect();

    let mut eig = sym_eig(&state.matrix)?;
    while state.steps < total_steps {
        if state.steps.is_multiple_of(check_every) {
            state.check(&eig, &sched)?;
        }
        let u_next = state.upper + sched.upper_step;
        let l_next = state.lower + sched.lower_step;
        let gap_u = upper_potential(&eig.values, state.upper) - upper_potential(&eig.values, u_next);
        let gap_l = lower_potential(&eig.values, l_next) - lower_potential(&eig.values, state.lower);
        // Per-eigendirection coefficients of the two quadratic forms.
        let coef_u: Vec<f64> = eig
            .values
            .iter()
            .map(|&lam| {
                let r = 1.0 / (u_next - lam);
                r * r / gap_u + r
            })
            .collect();
        let coef_l: Vec<f64> = eig
            .values
            .iter()
            .map(|&lam| {
                let r = 1.0 / (lam - l_next);
                r * r / gap_l - r
            })
            .collect();
        let basis_t = eig.vectors.transpose();

        let quotients: Vec<(f64, f64)> = (0..d)
            .into_par_iter()
            .map(|i| {
                if norms[i] == 0.0 {
                    return (0.0, 0.0);
                }
                let v = vectors.row(i);
                let (mut up, mut lo) = (0.0, 0.0);
                for p in 0..k {
                    let z: f64 = basis_t.row(p).iter().zip(v).map(|(a, b)| a * b).sum();
                    let z2 = z * z;
                    up += z2 * coef_u[p];
                    lo += z2 * coef_l[p];
                }
                (up, lo)
            })
            .collect();

        let margin = |i: usize| {
            let (up, lo) = quotients[i];
            if up > 0.0 {
                lo - up
            } else {
                f64::NEG_INFINITY
            }
        };
        let best = (0..d).map(margin).fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() || best < -TIE_TOL * best.abs().max(1.0) {
            return Err(Error::Invariant(format!(
                "no admissible vector at step {} (best margin {best:e})",
                state.steps
            )));
        }
        let cut = best - TIE_TOL * best.abs().max(1.0);
        let pick = (0..d).find(|&i| margin(i) >= cut).expect("best margin is attained");
        let (up, lo) = quotients[pick];
        let t = 2.0 / (up + lo);

        let v = vectors.row(pick);
        for a in 0..k {
            let row = state.matrix.row_mut(a);
            for (b, x) in row.iter_mut().enumerate() {
                *x += t * v[a] * v[b];
            }
        }
        state.weights[pick] += t;
        state.upper = u_next;
        state.lower = l_next;
        state.steps += 1;
        eig = sym_eig(&state.matrix)?;
    }
    state.check(&eig, &sched)?;

    let scale = 2.0 / (eig.min() + eig.max());
    let weights: Vec<f64> = state.weights.iter().map(|w| w * scale).collect();
    let mut sum = DenseMatrix::zeros(k, k);
    for (i, &w) in weights.iter().enumerate().filter(|(_, w)| **w > 0.0) {
        let v = vectors.row(i);
        for a in 0..k {
            for b in 0..k {
                sum[(a, b)] += w * v[a] * v[b];
            }
        }
    }
    let sandwich = psd_sandwich_check(&DenseMatrix::identity(k), &sum, eps)?;
    if !sandwich.holds {
        return Err(Error::Invariant(format!(
            "selected weights reach only eps = {} (target {eps})",
            sandwich.eps_star
        )));
    }
    let nonzero = weights.iter().filter(|w| **w > 0.0).count();
    Ok(BssOutcome {
        weights,
        eps_achieved: sandwich.eps_star,
        steps: state.steps,
        nonzero,
    })
}
