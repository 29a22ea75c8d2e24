//! Feasible update maps in relative form, `R̃(X, A) = R(X, AX)` with `A` skew.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{
    ortho_residual, relative_gradient, stiefel_riemannian_gradient, GeometryKind, Problem,
};
use crate::linalg::{expm_skew, polar_factor, qr_positive, solve, Matrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetractionKind {
    /// `exp(A) X`
    Exponential,
    /// `P(X + AX)`, the polar factor.
    Projection,
    /// `(I - A/2)^{-1} (I + A/2) X`
    Cayley,
    /// Q factor of `X + AX` with positive `diag(R)`.
    Qr,
}

impl RetractionKind {
    pub const ALL: [RetractionKind; 4] = [
        RetractionKind::Exponential,
        RetractionKind::Projection,
        RetractionKind::Cayley,
        RetractionKind::Qr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RetractionKind::Exponential => "exp",
            RetractionKind::Projection => "projection",
            RetractionKind::Cayley => "cayley",
            RetractionKind::Qr => "qr",
        }
    }

    /// Kinds that have an `O(np²)` form on the Stiefel manifold.
    pub fn supports_stiefel(self) -> bool {
        matches!(self, RetractionKind::Projection | RetractionKind::Qr)
    }
}

impl fmt::Display for RetractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RetractionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(Self::Exponential),
            "projection" | "proj" | "polar" => Ok(Self::Projection),
            "cayley" => Ok(Self::Cayley),
            "qr" => Ok(Self::Qr),
            other => Err(Error::Config(format!("unknown retraction `{other}`"))),
        }
    }
}

fn check_inputs<T: Real>(x: &Matrix<T>, a: &Matrix<T>) -> Result<()> {
    if !x.is_square() || a.shape() != x.shape() {
        return Err(Error::Shape(format!(
            "retraction expects square X and A of equal size, got {:?} and {:?}",
            x.shape(),
            a.shape()
        )));
    }
    let asym = (a + &a.transpose()).norm();
    if asym > T::tol(1e-10) * a.norm() {
        return Err(Error::NotSkew {
            asym: asym.to_f64(),
        });
    }
    let p = x.rows();
    let drift = ortho_residual(x, GeometryKind::Orthogonal(p));
    let slack = T::tol(1e-6) * T::from_f64((p as f64).sqrt());
    if drift > slack {
        // Drifted inputs are legitimate in error-accumulation studies.
        log::warn!("retraction applied at a point {drift:e} away from the manifold");
    }
    Ok(())
}

/// Applies one of the four relative retractions at a square point.
pub fn retract<T: Real>(kind: RetractionKind, x: &Matrix<T>, a: &Matrix<T>) -> Result<Matrix<T>> {
    check_inputs(x, a)?;
    match kind {
        RetractionKind::Exponential => Ok(expm_skew(a)?.matmul(x)),
        RetractionKind::Projection => polar_factor(&(x + &a.matmul(x))),
        RetractionKind::Cayley => {
            let half = T::from_f64(0.5);
            let mut lhs = a.scale(-half);
            lhs.add_diag(T::one());
            let mut rhs = a.scale(half);
            rhs.add_diag(T::one());
            solve(&lhs, &rhs.matmul(x))
        }
        RetractionKind::Qr => Ok(qr_positive(&(x + &a.matmul(x)))?.0),
    }
}

/// Maps an arbitrary full-rank tall point back to the Stiefel manifold.
pub fn stiefel_retract_point<T: Real>(kind: RetractionKind, y: &Matrix<T>) -> Result<Matrix<T>> {
    match kind {
        RetractionKind::Projection => polar_factor(y),
        RetractionKind::Qr => Ok(qr_positive(y)?.0),
        _ => Err(Error::Unsupported("exponential/cayley retraction")),
    }
}

/// One Riemannian gradient step `R̃(X, -η ψ(X))`.
///
/// On the Stiefel manifold only the projection and QR retractions are
/// available; both act on `X - η ψ(X)X` directly.
pub fn riemannian_gd_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    eta: T,
    kind: RetractionKind,
    geometry: GeometryKind,
) -> Result<Matrix<T>> {
    if eta <= T::zero() {
        return Err(Error::Config(format!(
            "step size must be positive, got {eta}"
        )));
    }
    geometry.check(x)?;
    match geometry {
        GeometryKind::Orthogonal(_) => {
            let psi = relative_gradient(problem, x);
            retract(kind, x, &psi.scale(-eta))
        }
        GeometryKind::Stiefel { .. } => {
            let mut y = x.clone();
            y.axpy(-eta, &stiefel_riemannian_gradient(problem, x));
            stiefel_retract_point(kind, &y)
        }
    }
}
