use super::{inverse, qr_positive, Matrix, Real};
use crate::error::{Error, Result};

const MAX_NEWTON_ITERS: usize = 100;

/// Orthogonal polar factor of a full-rank matrix: the nearest matrix with
/// orthonormal columns, `M (MᵀM)^{-1/2}`.
///
/// Tall inputs are first reduced by QR (`M = QR` gives `polar(M) = Q polar(R)`),
/// so the Newton iteration only ever runs on a `p x p` matrix.
pub fn polar_factor<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if m.is_square() {
        return polar_factor_newton(m);
    }
    if m.rows() < m.cols() {
        return Err(Error::Shape(format!(
            "polar factor needs rows >= cols, got {:?}",
            m.shape()
        )));
    }
    let (q, r) = qr_positive(m)?;
    Ok(q.matmul(&polar_factor_newton(&r)?))
}

/// Scaled Newton iteration `Q <- ½(ζ Q + ζ⁻¹ Q^{-T})` on a square matrix.
///
/// The Frobenius scaling `ζ = (||Q^{-1}|| / ||Q||)^{1/2}` is dropped once
/// successive iterates are within `1e-2`; the iteration stops when they are
/// within `1e-13` (floored at a few ulps of `||Q||`), or fails after 100 steps.
pub fn polar_factor_newton<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "newton polar needs a square matrix, got {:?}",
            m.shape()
        )));
    }
    let p = m.rows();
    let half = T::from_f64(0.5);
    let floor = T::from_f64(8.0 * (p as f64).sqrt()) * T::epsilon();
    let tol = T::tol(1e-13).max(floor);
    let mut q = m.clone();
    let mut scaled = true;
    for _ in 0..MAX_NEWTON_ITERS {
        let inv_t = inverse(&q)
            .map_err(|e| match e {
                Error::Singular { pivot, threshold } => Error::RankDeficient { pivot, threshold },
                other => other,
            })?
            .transpose();
        let zeta = if scaled {
            (inv_t.norm() / q.norm()).sqrt()
        } else {
            T::one()
        };
        let mut next = q.scale(half * zeta);
        next.axpy(half / zeta, &inv_t);
        let diff = (&next - &q).norm();
        q = next;
        if diff <= tol {
            return Ok(q);
        }
        if diff < T::from_f64(1e-2) {
            scaled = false;
        }
    }
    Err(Error::NoConvergence {
        method: "newton polar iteration",
        iterations: MAX_NEWTON_ITERS,
    })
}
