//! The landing method and its baselines.
//!
//! The landing field `Λ(X) = ψ(X)X + λ∇N(X)` adds to the Riemannian gradient
//! a penalty gradient that pulls the iterate back to the manifold. The two
//! terms are orthogonal, so following `-Λ` decreases `f` along the manifold
//! while the orthogonality residual `‖Δ‖` is driven to zero; no retraction is
//! ever computed. A safe step-size rule bounds every step so the iterate stays
//! inside `‖Δ‖_F <= eps`.

mod config;
mod run;
mod safe_step;
mod steps;

pub use config::{MomentumOrdering, OptimizerConfig, StepSchedule};
pub use run::{run, Budget, Method, RunOutput, RunStatus, RunTrace, TraceRow, DIVERGENCE_NORM};
pub use safe_step::{safe_step_formula, safe_step_size, SafeStep};
pub use steps::{
    landing_field, landing_field_from, landing_step, landing_update, momentum_landing_step,
    momentum_update, penalty_gd_step, plam_field, plam_field_from, plam_step,
    stochastic_landing_step, OptimizerState, StepInfo,
};
