use crate::error::Result;
use crate::geometry::{ortho_residual, GeometryKind};
use crate::linalg::{Real, RngState};
use crate::retractions::{retract, RetractionKind};

/// Update applied in [`single_step_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    /// `X - η(A + λ(XXᵀ - I))X`
    Landing,
    /// `R̃(X, ηA)`
    Retraction(RetractionKind),
}

impl StepMethod {
    pub fn name(self) -> &'static str {
        match self {
            StepMethod::Landing => "landing",
            StepMethod::Retraction(kind) => kind.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleStep {
    pub residual_in: f64,
    pub residual_out: f64,
}

impl SingleStep {
    pub fn ratio(&self) -> f64 {
        self.residual_out / self.residual_in
    }
}

/// One step from a perturbed identity along a random skew direction.
///
/// Draws `E` with i.i.d. `N(0, σ²)` entries, then `A` skew with `N(0, γ²)`
/// strictly lower entries, and reports `‖XXᵀ - I‖_F` for `X = I + E` and for
/// the updated point. The draws do not depend on `method`, so the same seed
/// compares methods on identical inputs.
pub fn single_step_experiment<T: Real>(
    p: usize,
    sigma: f64,
    gamma: f64,
    eta: f64,
    lambda: f64,
    method: StepMethod,
    rng: &mut RngState,
) -> Result<SingleStep> {
    let kind = GeometryKind::Orthogonal(p);
    let mut x = rng.gaussian::<T>(p, p).scale(T::from_f64(sigma));
    x.add_diag(T::one());
    let a = rng.skew::<T>(p, gamma);
    let residual_in = ortho_residual(&x, kind).to_f64();
    let out = match method {
        StepMethod::Landing => {
            let mut m = x.matmul_t(&x);
            m.add_diag(-T::one());
            let mut dir = m.scale(T::from_f64(lambda));
            dir += &a;
            let mut out = x.clone();
            out.axpy(T::from_f64(-eta), &dir.matmul(&x));
            out
        }
        StepMethod::Retraction(r) => retract(r, &x, &a.scale(T::from_f64(eta)))?,
    };
    Ok(SingleStep {
        residual_in,
        residual_out: ortho_residual(&out, kind).to_f64(),
    })
}
