use crate::error::{Error, Result};
use crate::geometry::{
    relative_grad_norm_from, relative_gradient_from, residual, stiefel_riemannian_gradient_from,
    sym_part, GeometryKind, Problem,
};
use crate::linalg::{Matrix, Real, RngState};

use super::{safe_step_size, MomentumOrdering, OptimizerConfig};

/// Iterate, momentum buffer and iteration counter of a landing run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub x: Matrix<T>,
    /// Skew momentum buffer `A`, `p x p`; only used by the momentum variant.
    pub momentum: Matrix<T>,
    pub k: usize,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(x: Matrix<T>) -> Self {
        let p = x.cols();
        Self {
            momentum: Matrix::zeros(p, p),
            x,
            k: 0,
        }
    }
}

/// What one update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Step size actually applied.
    pub eta: f64,
    /// Norm of the skew direction that moved the iterate.
    pub direction_norm: f64,
    /// Residual `‖Δ‖_F` before the update.
    pub residual: f64,
}

fn step_size(config: &OptimizerConfig, k: usize, a: f64, d: f64) -> Result<f64> {
    let target = config.schedule.eta(k + 1);
    if !config.safe_rule {
        return Ok(target);
    }
    Ok(safe_step_size(a, d, config.eps, config.lambda)?.clamp(target))
}

/// Landing field `Λ(X) = ψ(X)X + λ∇N(X)` from a precomputed gradient.
///
/// On `O_p` this is `(ψ + λΔ) X`, three products in total (`GXᵀ`, `XXᵀ`
/// and the final one). On `S_{n,p}` it is `ψX + λXΔ` in factored form.
pub fn landing_field_from<T: Real>(
    egrad: &Matrix<T>,
    x: &Matrix<T>,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    let lambda = T::from_f64(lambda);
    match kind {
        GeometryKind::Orthogonal(_) => {
            let mut m = relative_gradient_from(egrad, x);
            m.axpy(lambda, &residual(x, kind));
            m.matmul(x)
        }
        GeometryKind::Stiefel { .. } => {
            let mut field = stiefel_riemannian_gradient_from(egrad, x);
            field.axpy(lambda, &x.matmul(&residual(x, kind)));
            field
        }
    }
}

pub fn landing_field<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    landing_field_from(&problem.egrad(x), x, lambda, kind)
}

/// One safe landing update from a precomputed Euclidean gradient; `k` is the
/// number of updates already taken. Used directly by multi-matrix models.
pub fn landing_update<T: Real>(
    x: &Matrix<T>,
    egrad: &Matrix<T>,
    config: &OptimizerConfig,
    k: usize,
    kind: GeometryKind,
) -> Result<(Matrix<T>, StepInfo)> {
    kind.check(x)?;
    let lambda = T::from_f64(config.lambda);
    let (field, a, d) = match kind {
        GeometryKind::Orthogonal(_) => {
            let psi = relative_gradient_from(egrad, x);
            let delta = residual(x, kind);
            let a = psi.norm().to_f64();
            let d = delta.norm().to_f64();
            let mut m = psi;
            m.axpy(lambda, &delta);
            (m.matmul(x), a, d)
        }
        GeometryKind::Stiefel { .. } => {
            let delta = residual(x, kind);
            let a = relative_grad_norm_from(egrad, x, kind).to_f64();
            let d = delta.norm().to_f64();
            let mut field = stiefel_riemannian_gradient_from(egrad, x);
            field.axpy(lambda, &x.matmul(&delta));
            (field, a, d)
        }
    };
    let eta = step_size(config, k, a, d)?;
    let mut next = x.clone();
    next.axpy(T::from_f64(-eta), &field);
    Ok((
        next,
        StepInfo {
            eta,
            direction_norm: a,
            residual: d,
        },
    ))
}

/// One iteration of the landing algorithm with the safe step-size rule:
/// `η = min(η_k, η*)`, `X <- X - ηΛ(X)`.
pub fn landing_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    state: &mut OptimizerState<T>,
    config: &OptimizerConfig,
    kind: GeometryKind,
) -> Result<StepInfo> {
    let g = problem.egrad(&state.x);
    let (x, info) = landing_update(&state.x, &g, config, state.k, kind)?;
    state.x = x;
    state.k += 1;
    Ok(info)
}

/// Momentum landing:
/// `A_{k+1} = (1 - γ)A_k + γψ(X_k)`, `X_{k+1} = X_k - η(A X_k + λ∇N(X_k))`,
/// where `A` is `A_k` or `A_{k+1}` according to
/// [`OptimizerConfig::momentum_ordering`]. The safe rule uses `a = ‖A‖`.
/// Square iterates only: the buffer is a `p x p` skew matrix.
pub fn momentum_landing_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    state: &mut OptimizerState<T>,
    config: &OptimizerConfig,
    kind: GeometryKind,
) -> Result<StepInfo> {
    let g = problem.egrad(&state.x);
    momentum_update(state, &g, config, kind)
}

/// [`momentum_landing_step`] from a precomputed gradient.
pub fn momentum_update<T: Real>(
    state: &mut OptimizerState<T>,
    egrad: &Matrix<T>,
    config: &OptimizerConfig,
    kind: GeometryKind,
) -> Result<StepInfo> {
    if kind.is_stiefel() {
        return Err(Error::Unsupported("momentum landing"));
    }
    kind.check(&state.x)?;
    let gamma = T::from_f64(config.gamma);
    let psi = relative_gradient_from(egrad, &state.x);
    let mut updated = state.momentum.scale(T::one() - gamma);
    updated.axpy(gamma, &psi);
    let delta = residual(&state.x, kind);
    let d = delta.norm().to_f64();
    let mut m = match config.momentum_ordering {
        MomentumOrdering::Previous => state.momentum.clone(),
        MomentumOrdering::Updated => updated.clone(),
    };
    let a = m.norm().to_f64();
    let eta = step_size(config, state.k, a, d)?;
    m.axpy(T::from_f64(config.lambda), &delta);
    state.x.axpy(T::from_f64(-eta), &m.matmul(&state.x));
    state.momentum = updated;
    state.k += 1;
    Ok(StepInfo {
        eta,
        direction_norm: a,
        residual: d,
    })
}

/// Stochastic landing: draws `i` uniformly among the problem's samples and
/// takes a safe landing step along `ψ_i(X)X + λ∇N(X)`.
pub fn stochastic_landing_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    state: &mut OptimizerState<T>,
    config: &OptimizerConfig,
    kind: GeometryKind,
    rng: &mut RngState,
) -> Result<StepInfo> {
    let i = rng.index(problem.n_samples().max(1));
    let g = problem
        .stoch_egrad(&state.x, i)
        .ok_or(Error::MissingStochasticGradient)?;
    let (x, info) = landing_update(&state.x, &g, config, state.k, kind)?;
    state.x = x;
    state.k += 1;
    Ok(info)
}

/// PLAM field `∇f(X) - Sym(∇f(X)Xᵀ)X + λ(XXᵀ - I)X`.
///
/// On `S_{n,p}` the symmetric term is evaluated as `½(G XᵀX + X GᵀX)`.
pub fn plam_field_from<T: Real>(
    egrad: &Matrix<T>,
    x: &Matrix<T>,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    let lambda = T::from_f64(lambda);
    let mut field = egrad.clone();
    match kind {
        GeometryKind::Orthogonal(_) => {
            let mut m = sym_part(&egrad.matmul_t(x)).scale(-T::one());
            m.axpy(lambda, &residual(x, kind));
            field += &m.matmul(x);
        }
        GeometryKind::Stiefel { .. } => {
            let half = T::from_f64(0.5);
            let xtx = x.t_matmul(x);
            let gtx = egrad.t_matmul(x);
            field.axpy(-half, &egrad.matmul(&xtx));
            field.axpy(-half, &x.matmul(&gtx));
            field.axpy(lambda, &x.matmul(&residual(x, kind)));
        }
    }
    field
}

pub fn plam_field<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    plam_field_from(&problem.egrad(x), x, lambda, kind)
}

/// `X - ηΛ_plam(X)` with no step-size safeguard.
pub fn plam_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    eta: f64,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    let mut next = x.clone();
    next.axpy(T::from_f64(-eta), &plam_field(problem, x, lambda, kind));
    next
}

/// Gradient step on `f + λN`: `X - η(∇f(X) + λ∇N(X))`.
pub fn penalty_gd_step<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    eta: f64,
    lambda: f64,
    kind: GeometryKind,
) -> Matrix<T> {
    let mut dir = problem.egrad(x);
    let delta = residual(x, kind);
    let penalty_grad = match kind {
        GeometryKind::Orthogonal(_) => delta.matmul(x),
        GeometryKind::Stiefel { .. } => x.matmul(&delta),
    };
    dir.axpy(T::from_f64(lambda), &penalty_grad);
    let mut next = x.clone();
    next.axpy(T::from_f64(-eta), &dir);
    next
}
