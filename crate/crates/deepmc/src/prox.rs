//! Closed-form proximal operators.
//!
//! These three operators are the nonsmooth half of the alternating training
//! scheme; each solves a small convex subproblem exactly:
//!
//! * [`soft_threshold`] — prox of `τ·|x|`:
//!   `argmin_z τ|z| + ½(z − x)²  =  sign(x)·max(|x| − τ, 0)`
//! * [`svt`] — prox of the nuclear norm `τ·‖·‖_*`: soft-threshold the
//!   singular values and reassemble.
//! * [`clip_linf`] — Euclidean projection onto the box `{‖θ‖∞ ≤ m}`:
//!   clamp every entry to `[-m, m]`.

use crate::matrix::{svd, Matrix};
use crate::Result;

/// Scalar shrinkage `sign(x)·max(|x| − τ, 0)`, the prox of `τ·|x|`.
///
/// `tau` must be nonnegative. Entries with `|x| ≤ τ` map to exactly `0.0`
/// (no negative zero, no residue), which is what makes the thresholded
/// codes genuinely sparse.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0, "shrinkage threshold must be nonnegative");
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag * x.signum()
    } else {
        0.0
    }
}

/// Entrywise [`soft_threshold`] over a matrix.
pub fn soft_threshold_matrix(m: &Matrix, tau: f64) -> Matrix {
    m.map(|x| soft_threshold(x, tau))
}

/// Singular value thresholding: the prox of `τ·‖·‖_*` at `m`.
///
/// Computes `U · diag(soft_threshold(σ, τ)) · Vᵀ`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_with_values(m, tau)?.0)
}

/// [`svt`] that also returns the thresholded singular values.
///
/// Their sum is the nuclear norm of the returned matrix, which the training
/// objective needs anyway; returning both avoids a second decomposition.
pub fn svt_with_values(m: &Matrix, tau: f64) -> Result<(Matrix, Vec<f64>)> {
    let f = svd(m)?;
    let thresholded: Vec<f64> = f.s.iter().map(|&s| soft_threshold(s, tau)).collect();
    let k = thresholded.len();
    let mut svt_rows = f.vt;
    for (i, &s) in thresholded.iter().enumerate().take(k) {
        for x in svt_rows.row_mut(i) {
            *x *= s;
        }
    }
    Ok((f.u.matmul(&svt_rows), thresholded))
}

/// Scalar clamp to `[-bound, bound]`.
#[inline]
pub fn clip_scalar(x: f64, bound: f64) -> f64 {
    debug_assert!(bound >= 0.0, "box radius must be nonnegative");
    x.clamp(-bound, bound)
}

/// Euclidean projection onto the ℓ∞ ball of radius `bound`.
pub fn clip_linf(m: &Matrix, bound: f64) -> Matrix {
    m.map(|x| clip_scalar(x, bound))
}

/// In-place ℓ∞ projection over a flat slice.
pub fn clip_linf_slice(xs: &mut [f64], bound: f64) {
    for x in xs {
        *x = clip_scalar(*x, bound);
    }
}

// ─── tests ───
