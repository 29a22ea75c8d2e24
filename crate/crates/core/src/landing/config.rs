use crate::error::{Error, Result};

/// Target step sizes `η_k` for iterations `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η_k = c · k^{-α}` with `α ∈ (½, 1)`.
    PowerDecay {
        c: f64,
        alpha: f64,
    },
}

impl StepSchedule {
    /// Step for the 1-based iteration `k`.
    pub fn eta(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::PowerDecay { c, alpha } => c * (k.max(1) as f64).powf(-alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant(eta) if !(eta > 0.0 && eta.is_finite()) => Err(Error::Config(
                format!("constant step must be positive, got {eta}"),
            )),
            StepSchedule::PowerDecay { c, .. } if !(c > 0.0 && c.is_finite()) => Err(
                Error::Config(format!("decay scale must be positive, got {c}")),
            ),
            StepSchedule::PowerDecay { alpha, .. } if !(alpha > 0.5 && alpha < 1.0) => Err(
                Error::Config(format!("decay exponent must lie in (1/2, 1), got {alpha}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Which momentum buffer moves `X` in the momentum landing update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentumOrdering {
    /// `X_{k+1} = X_k - η(A_k X_k + λ∇N(X_k))`: the buffer before this
    /// iteration's update.
    #[default]
    Previous,
    /// Uses the freshly updated `A_{k+1}` instead.
    Updated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Weight of the orthogonality penalty in the landing field.
    pub lambda: f64,
    /// Radius of the safe region `‖Δ‖_F <= eps`; must be below 1.
    pub eps: f64,
    pub schedule: StepSchedule,
    /// Momentum weight in `A_{k+1} = (1 - γ)A_k + γψ(X_k)`.
    pub gamma: f64,
    pub momentum_ordering: MomentumOrdering,
    pub max_iter: usize,
    /// Clamp the schedule with the safe step size (landing variants only).
    pub safe_rule: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eps: 0.5,
            schedule: StepSchedule::Constant(0.1),
            gamma: 0.0,
            momentum_ordering: MomentumOrdering::Previous,
            max_iter: 1000,
            safe_rule: true,
        }
    }
}

impl OptimizerConfig {
    pub fn with_step(eta: f64) -> Self {
        Self {
            schedule: StepSchedule::Constant(eta),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        self.schedule.validate()
    }
}
