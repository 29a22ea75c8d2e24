//! Optimization on the orthogonal group and the Stiefel manifold with the
//! retraction-free landing method, alongside retraction-based Riemannian
//! gradient descent, PLAM and penalty baselines.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense matrices, QR, LU solve, matrix exponential, polar
//!   factor and seeded random matrices.
//! - [`geometry`]: relative/Riemannian gradients, the orthogonality penalty
//!   and the factored Stiefel forms.
//! - [`retractions`]: the exponential, projection, Cayley and QR maps.
//! - [`landing`]: the landing field, safe step-size rule, step variants,
//!   baselines and the iteration driver.
//! - [`problems`]: objective functions and their optimum oracles.

pub mod error;
pub mod geometry;
pub mod landing;
pub mod linalg;
pub mod problems;
pub mod retractions;

pub use error::{Error, Result};
pub use geometry::{GeometryKind, Problem};
pub use landing::{
    run, Budget, Method, MomentumOrdering, OptimizerConfig, OptimizerState, RunOutput, RunStatus,
    RunTrace, SafeStep, StepSchedule, TraceRow,
};
pub use linalg::{Matrix, Precision, Real, RngState};
pub use retractions::RetractionKind;
