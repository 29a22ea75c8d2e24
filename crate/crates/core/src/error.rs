use thiserror::Error;

/// Errors raised by the numerical kernels and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is rank deficient (|r_ii| = {pivot:e} below {threshold:e})")]
    RankDeficient { pivot: f64, threshold: f64 },
    #[error("matrix is singular (pivot {pivot:e} below {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("input is not skew-symmetric (||A + A^T|| = {asym:e})")]
    NotSkew { asym: f64 },
    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },
    #[error("problem does not provide a Hessian-vector product")]
    MissingHessian,
    #[error("problem does not provide stochastic gradients")]
    MissingStochasticGradient,
    #[error("iterate left the safe region: residual {residual:e} > eps {eps:e}")]
    UnsafeRegion { residual: f64, eps: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} is not available on this geometry")]
    Unsupported(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
