use crate::error::{Error, Result};

/// Largest step keeping one landing update inside `‖Δ‖_F <= eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SafeStep {
    Bounded(f64),
    /// Stationary feasible point (`a = d = 0`): any step is safe.
    Unbounded,
}

impl SafeStep {
    /// `min(target, self)`.
    pub fn clamp(self, target: f64) -> f64 {
        match self {
            SafeStep::Bounded(eta) => target.min(eta),
            SafeStep::Unbounded => target,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            SafeStep::Bounded(eta) => eta,
            SafeStep::Unbounded => f64::INFINITY,
        }
    }
}

/// Positive root of `d - αη + βη² = eps`, with
/// `α = 2λd - 2ad - 2λd²` and `β = a² + λ²d³ + 2λad² + a²d`.
///
/// `a = ‖ψ(X)‖_F`, `d = ‖XXᵀ - I‖_F`. Returns `None` when `β = 0`.
pub fn safe_step_formula(a: f64, d: f64, eps: f64, lambda: f64) -> Option<f64> {
    let alpha = 2.0 * lambda * d - 2.0 * a * d - 2.0 * lambda * d * d;
    let beta = a * a + lambda * lambda * d.powi(3) + 2.0 * lambda * a * d * d + a * a * d;
    if beta == 0.0 {
        return None;
    }
    let disc = alpha * alpha + 4.0 * beta * (eps - d);
    Some((alpha + disc.max(0.0).sqrt()) / (2.0 * beta))
}

/// Safe step size for the landing update at residual `d` with relative
/// gradient norm `a`.
///
/// The quadratic bound behind [`safe_step_formula`] expands `‖Δ_new‖` term by
/// term with nonnegative coefficients, which only holds while `ηλ <= ½`. For
/// `d > 0` the result is therefore also capped at `1/(2λ)`; at `d = 0` every
/// term carrying `Δ` vanishes and the root `√eps / a` is exact.
pub fn safe_step_size(a: f64, d: f64, eps: f64, lambda: f64) -> Result<SafeStep> {
    if d > eps {
        return Err(Error::UnsafeRegion { residual: d, eps });
    }
    let Some(root) = safe_step_formula(a, d, eps, lambda) else {
        return Ok(SafeStep::Unbounded);
    };
    if d == 0.0 {
        Ok(SafeStep::Bounded(root))
    } else {
        Ok(SafeStep::Bounded(root.min(0.5 / lambda)))
    }
}
