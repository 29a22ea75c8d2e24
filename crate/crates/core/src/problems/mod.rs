//! Objective functions with known optima, plus the distillation model and the
//! single-step orthogonalization experiment.

mod distill;
mod ortho_step;
mod procrustes;
mod stiefel;
mod stochastic;

pub use distill::{train_distillation, DistillOptions, Distillation, Gradients, Mlp};
pub use ortho_step::{single_step_experiment, SingleStep, StepMethod};
pub use procrustes::{PlamCounterexample, Procrustes, Side};
pub use stiefel::StiefelProcrustes;
pub use stochastic::NoisyRotation;
