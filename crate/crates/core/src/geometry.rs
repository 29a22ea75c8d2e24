//! Relative and Riemannian derivatives on the orthogonal group `O_p` and the
//! Stiefel manifold `S_{n,p}`, and the orthogonality penalty
//! `N(X) = ¼‖Δ‖²`.
//!
//! The residual `Δ` is `XXᵀ - I_p` on `O_p` and `XᵀX - I_p` on `S_{n,p}`; the
//! penalty gradient is `ΔX` and `XΔ` respectively. On the Stiefel manifold the
//! `n x n` relative gradient is never formed: only the factored `O(np²)`
//! expressions are used.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Real};

/// An objective on square or tall matrices.
///
/// `value` and `egrad` are required. A Hessian-vector product and per-sample
/// gradients are optional; the defaults report them as unavailable (a
/// deterministic problem is its own single sample). Implementations must be
/// callable from several runs at once.
pub trait Problem<T: Real>: Send + Sync {
    fn value(&self, x: &Matrix<T>) -> T;

    /// Euclidean gradient `∇f(X)`.
    fn egrad(&self, x: &Matrix<T>) -> Matrix<T>;

    /// Euclidean Hessian applied to a direction, `H_X(E)`.
    fn ehess_vec(&self, _x: &Matrix<T>, _e: &Matrix<T>) -> Option<Matrix<T>> {
        None
    }

    /// Number of terms `f_i` in `f = mean_i f_i`.
    fn n_samples(&self) -> usize {
        1
    }

    /// Gradient of the `i`-th term, `i` in `0..n_samples()`.
    fn stoch_egrad(&self, x: &Matrix<T>, i: usize) -> Option<Matrix<T>> {
        (self.n_samples() == 1 && i == 0).then(|| self.egrad(x))
    }
}

impl<T: Real, P: Problem<T> + ?Sized> Problem<T> for &P {
    fn value(&self, x: &Matrix<T>) -> T {
        (**self).value(x)
    }
    fn egrad(&self, x: &Matrix<T>) -> Matrix<T> {
        (**self).egrad(x)
    }
    fn ehess_vec(&self, x: &Matrix<T>, e: &Matrix<T>) -> Option<Matrix<T>> {
        (**self).ehess_vec(x, e)
    }
    fn n_samples(&self) -> usize {
        (**self).n_samples()
    }
    fn stoch_egrad(&self, x: &Matrix<T>, i: usize) -> Option<Matrix<T>> {
        (**self).stoch_egrad(x, i)
    }
}

/// Which manifold an iterate is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Orthogonal(usize),
    Stiefel { n: usize, p: usize },
}

impl GeometryKind {
    pub fn stiefel(n: usize, p: usize) -> Result<Self> {
        if n < p || p == 0 {
            return Err(Error::Shape(format!(
                "stiefel manifold needs n >= p >= 1, got {n}x{p}"
            )));
        }
        Ok(Self::Stiefel { n, p })
    }

    /// Orthogonal for square points, Stiefel for tall ones.
    pub fn of<T: Real>(x: &Matrix<T>) -> Result<Self> {
        if x.is_square() {
            Ok(Self::Orthogonal(x.rows()))
        } else {
            Self::stiefel(x.rows(), x.cols())
        }
    }

    pub fn shape(self) -> (usize, usize) {
        match self {
            Self::Orthogonal(p) => (p, p),
            Self::Stiefel { n, p } => (n, p),
        }
    }

    pub fn check<T: Real>(self, x: &Matrix<T>) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::Shape(format!(
                "point of shape {:?} on {:?}",
                x.shape(),
                self
            )));
        }
        Ok(())
    }

    pub fn is_stiefel(self) -> bool {
        matches!(self, Self::Stiefel { .. })
    }
}

fn require_square<T: Real>(m: &Matrix<T>, what: &str) {
    assert!(
        m.is_square(),
        "{what} needs a square matrix, got {:?}",
        m.shape()
    );
}

/// `½(M - Mᵀ)`; entry `(j, i)` is the exact negation of entry `(i, j)`.
pub fn skew_part<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    require_square(m, "skew_part");
    let half = T::from_f64(0.5);
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..i {
            let v = half * (m[(i, j)] - m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    out
}

/// `½(M + Mᵀ)`.
pub fn sym_part<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    require_square(m, "sym_part");
    let half = T::from_f64(0.5);
    Matrix::from_fn(m.rows(), m.cols(), |i, j| half * (m[(i, j)] + m[(j, i)]))
}

/// `ψ(X) = Skew(G Xᵀ)` for a precomputed Euclidean gradient `G`.
pub fn relative_gradient_from<T: Real>(egrad: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    skew_part(&egrad.matmul_t(x))
}

/// Relative gradient `ψ(X) = Skew(∇f(X) Xᵀ)` of a square point.
pub fn relative_gradient<T: Real, P: Problem<T> + ?Sized>(problem: &P, x: &Matrix<T>) -> Matrix<T> {
    require_square(x, "relative_gradient");
    relative_gradient_from(&problem.egrad(x), x)
}

/// Riemannian gradient written through the relative gradient, `ψ(X) X`.
pub fn riemannian_gradient<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
) -> Matrix<T> {
    relative_gradient(problem, x).matmul(x)
}

/// Relative Hessian `Skew(H_X(AX) Xᵀ - ∇f(X) Xᵀ A)` applied to a skew `A`.
pub fn relative_hessian_apply<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    a: &Matrix<T>,
) -> Result<Matrix<T>> {
    require_square(x, "relative_hessian_apply");
    let hv = problem
        .ehess_vec(x, &a.matmul(x))
        .ok_or(Error::MissingHessian)?;
    let g = problem.egrad(x);
    let term = hv.matmul_t(x) - g.matmul_t(x).matmul(a);
    Ok(skew_part(&term))
}

/// Orthogonality residual matrix `Δ`.
pub fn residual<T: Real>(x: &Matrix<T>, kind: GeometryKind) -> Matrix<T> {
    let mut delta = match kind {
        GeometryKind::Orthogonal(_) => x.matmul_t(x),
        GeometryKind::Stiefel { .. } => x.t_matmul(x),
    };
    delta.add_diag(-T::one());
    delta
}

/// `‖Δ‖_F`.
pub fn ortho_residual<T: Real>(x: &Matrix<T>, kind: GeometryKind) -> T {
    residual(x, kind).norm()
}

/// `N(X) = ¼‖Δ‖²`.
pub fn penalty<T: Real>(x: &Matrix<T>, kind: GeometryKind) -> T {
    T::from_f64(0.25) * residual(x, kind).norm_sq()
}

/// `∇N(X)`: `ΔX` on `O_p`, `XΔ` on `S_{n,p}`.
pub fn penalty_gradient<T: Real>(x: &Matrix<T>, kind: GeometryKind) -> Matrix<T> {
    let delta = residual(x, kind);
    match kind {
        GeometryKind::Orthogonal(_) => delta.matmul(x),
        GeometryKind::Stiefel { .. } => x.matmul(&delta),
    }
}

/// `ψ(X) X = ½(G (XᵀX) - X (GᵀX))` in `O(np²)`.
pub fn stiefel_riemannian_gradient_from<T: Real>(egrad: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    assert_eq!(egrad.shape(), x.shape(), "gradient and point shapes differ");
    let half = T::from_f64(0.5);
    let xtx = x.t_matmul(x);
    let gtx = egrad.t_matmul(x);
    let mut out = egrad.matmul(&xtx);
    out -= &x.matmul(&gtx);
    out.scale(half)
}

/// Riemannian gradient on `S_{n,p}` without forming any `n x n` matrix.
pub fn stiefel_riemannian_gradient<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
) -> Matrix<T> {
    stiefel_riemannian_gradient_from(&problem.egrad(x), x)
}

/// `‖Skew(G Xᵀ)‖_F` from `‖ψ‖² = ½[tr((GᵀG)(XᵀX)) - tr((XᵀG)(XᵀG))]`.
pub fn stiefel_relative_grad_norm_from<T: Real>(egrad: &Matrix<T>, x: &Matrix<T>) -> T {
    let gtg = egrad.t_matmul(egrad);
    let xtx = x.t_matmul(x);
    let xtg = x.t_matmul(egrad);
    // tr(AB) = ⟨Aᵀ, B⟩; GᵀG is symmetric.
    let first = gtg.dot(&xtx);
    let second = xtg.transpose().dot(&xtg);
    (T::from_f64(0.5) * (first - second)).max(T::zero()).sqrt()
}

pub fn stiefel_relative_grad_norm<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
) -> T {
    stiefel_relative_grad_norm_from(&problem.egrad(x), x)
}

/// `ψ(X)X` for either geometry.
pub fn tangent_direction_from<T: Real>(
    egrad: &Matrix<T>,
    x: &Matrix<T>,
    kind: GeometryKind,
) -> Matrix<T> {
    match kind {
        GeometryKind::Orthogonal(_) => relative_gradient_from(egrad, x).matmul(x),
        GeometryKind::Stiefel { .. } => stiefel_riemannian_gradient_from(egrad, x),
    }
}

/// `‖ψ(X)‖_F` for either geometry.
pub fn relative_grad_norm_from<T: Real>(egrad: &Matrix<T>, x: &Matrix<T>, kind: GeometryKind) -> T {
    match kind {
        GeometryKind::Orthogonal(_) => relative_gradient_from(egrad, x).norm(),
        GeometryKind::Stiefel { .. } => stiefel_relative_grad_norm_from(egrad, x),
    }
}
