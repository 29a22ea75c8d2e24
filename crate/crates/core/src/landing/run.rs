use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::{ortho_residual, relative_grad_norm_from, GeometryKind, Problem};
use crate::linalg::{Matrix, Real, RngState};
use crate::retractions::{riemannian_gd_step, RetractionKind};

use super::{
    landing_step, momentum_landing_step, penalty_gd_step, plam_step, stochastic_landing_step,
    OptimizerConfig, OptimizerState,
};

/// Iterates whose Frobenius norm exceeds this are reported as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Landing,
    MomentumLanding,
    StochasticLanding,
    Rgd(RetractionKind),
    Plam,
    PenaltyGd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Landing => "landing",
            Method::MomentumLanding => "momentum",
            Method::StochasticLanding => "stochastic",
            Method::Rgd(kind) => kind.name(),
            Method::Plam => "plam",
            Method::PenaltyGd => "penalty",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "landing" => Ok(Method::Landing),
            "momentum" | "momentum-landing" => Ok(Method::MomentumLanding),
            "stochastic" | "stochastic-landing" => Ok(Method::StochasticLanding),
            "plam" => Ok(Method::Plam),
            "penalty" | "penalty-gd" => Ok(Method::PenaltyGd),
            other => other
                .strip_prefix("rgd-")
                .unwrap_or(other)
                .parse::<RetractionKind>()
                .map(Method::Rgd)
                .map_err(|_| Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Running,
    Converged,
    Diverged,
    Budget,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::Converged => "converged",
            RunStatus::Diverged => "diverged",
            RunStatus::Budget => "budget",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "running" => Ok(RunStatus::Running),
            "converged" => Ok(RunStatus::Converged),
            "diverged" => Ok(RunStatus::Diverged),
            "budget" => Ok(RunStatus::Budget),
            other => Err(Error::Config(format!("unknown status `{other}`"))),
        }
    }
}

/// Stopping rules besides the iteration count in [`OptimizerConfig`].
///
/// A run converges once every tolerance that is set holds; with none set it
/// only stops on the iteration or time budget, or on divergence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Budget {
    pub max_time: Option<Duration>,
    /// Threshold on the recorded gradient norm.
    pub grad_tol: Option<f64>,
    /// Threshold on `‖Δ‖_F`.
    pub ortho_tol: Option<f64>,
}

/// One record per iterate: `iter = 0` is the starting point; `eta` is the step
/// that produced the iterate (0 for the first row); `time_s` accumulates the
/// time spent in updates only, excluding metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub time_s: f64,
    pub f: f64,
    pub ortho_err: f64,
    /// `‖ψ(X)‖_F` (for the momentum variant, `‖A‖_F`).
    pub grad_norm: f64,
    /// `‖X - X*‖_F`, NaN without an optimum oracle.
    pub dist_opt: f64,
    pub eta: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: String,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new(method: impl Into<String>) -> Self {
        Self {
            method: method.into(),
            rows: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn status(&self) -> RunStatus {
        self.last().map_or(RunStatus::Running, |r| r.status)
    }

    /// First iteration at which `pred` holds.
    pub fn first_iter_where(&self, pred: impl Fn(&TraceRow) -> bool) -> Option<usize> {
        self.rows.iter().find(|r| pred(r)).map(|r| r.iter)
    }
}

/// Trace plus the final iterate.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub trace: RunTrace,
    pub x: Matrix<T>,
}

fn measure<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x: &Matrix<T>,
    kind: GeometryKind,
    grad_norm_override: Option<f64>,
    optimum: Option<&Matrix<T>>,
) -> (f64, f64, f64, f64) {
    let f = problem.value(x).to_f64();
    let ortho = ortho_residual(x, kind).to_f64();
    let grad = grad_norm_override
        .unwrap_or_else(|| relative_grad_norm_from(&problem.egrad(x), x, kind).to_f64());
    let dist = optimum.map_or(f64::NAN, |opt| (x - opt).norm().to_f64());
    (f, ortho, grad, dist)
}

/// Runs `method` from `x0` for at most `config.max_iter` iterations.
///
/// The first row describes `x0`. The run ends early when the budget's
/// tolerances are met (`converged`), when the iterate blows up or an update
/// fails numerically (`diverged`), or when the time budget is spent.
pub fn run<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    x0: &Matrix<T>,
    config: &OptimizerConfig,
    method: Method,
    budget: &Budget,
    optimum: Option<&Matrix<T>>,
    rng: &mut RngState,
) -> Result<RunOutput<T>> {
    config.validate()?;
    let kind = GeometryKind::of(x0)?;
    if let Method::Rgd(r) = method {
        if kind.is_stiefel() && !r.supports_stiefel() {
            return Err(Error::Unsupported("exponential/cayley retraction"));
        }
    }
    if method == Method::MomentumLanding && kind.is_stiefel() {
        return Err(Error::Unsupported("momentum landing"));
    }
    if method == Method::StochasticLanding && problem.stoch_egrad(x0, 0).is_none() {
        return Err(Error::MissingStochasticGradient);
    }

    let mut trace = RunTrace::new(method.name());
    let mut state = OptimizerState::new(x0.clone());
    let momentum_norm = |s: &OptimizerState<T>| {
        (method == Method::MomentumLanding).then(|| s.momentum.norm().to_f64())
    };
    let done = |ortho: f64, grad: f64| {
        (budget.grad_tol.is_some() || budget.ortho_tol.is_some())
            && budget.grad_tol.is_none_or(|t| grad <= t)
            && budget.ortho_tol.is_none_or(|t| ortho <= t)
    };

    let (f, ortho, grad, dist) = measure(problem, &state.x, kind, momentum_norm(&state), optimum);
    let mut row = TraceRow {
        iter: 0,
        time_s: 0.0,
        f,
        ortho_err: ortho,
        grad_norm: grad,
        dist_opt: dist,
        eta: 0.0,
        status: RunStatus::Running,
    };
    if done(ortho, grad) {
        row.status = RunStatus::Converged;
    } else if config.max_iter == 0 {
        row.status = RunStatus::Budget;
    }
    trace.rows.push(row);

    let eta_target = |k: usize| config.schedule.eta(k + 1);
    let mut elapsed = Duration::ZERO;
    while trace.status() == RunStatus::Running {
        let started = Instant::now();
        let k = state.k;
        let outcome: Result<f64> = match method {
            Method::Landing => landing_step(problem, &mut state, config, kind).map(|i| i.eta),
            Method::MomentumLanding => {
                momentum_landing_step(problem, &mut state, config, kind).map(|i| i.eta)
            }
            Method::StochasticLanding => {
                stochastic_landing_step(problem, &mut state, config, kind, rng).map(|i| i.eta)
            }
            Method::Rgd(r) => {
                let eta = eta_target(k);
                riemannian_gd_step(problem, &state.x, T::from_f64(eta), r, kind).map(|x| {
                    state.x = x;
                    state.k += 1;
                    eta
                })
            }
            Method::Plam => {
                let eta = eta_target(k);
                state.x = plam_step(problem, &state.x, eta, config.lambda, kind);
                state.k += 1;
                Ok(eta)
            }
            Method::PenaltyGd => {
                let eta = eta_target(k);
                state.x = penalty_gd_step(problem, &state.x, eta, config.lambda, kind);
                state.k += 1;
                Ok(eta)
            }
        };
        elapsed += started.elapsed();

        let eta = match outcome {
            Ok(eta) => eta,
            Err(err @ (Error::Config(_) | Error::MissingStochasticGradient)) => return Err(err),
            Err(err) => {
                log::warn!("{method} stopped at iteration {k}: {err}");
                if let Some(last) = trace.rows.last_mut() {
                    last.status = RunStatus::Diverged;
                }
                break;
            }
        };

        let blown_up = !state.x.is_finite() || state.x.norm().to_f64() > DIVERGENCE_NORM;
        let (f, ortho, grad, dist) = if blown_up {
            let nan = f64::NAN;
            (nan, ortho_residual(&state.x, kind).to_f64(), nan, nan)
        } else {
            measure(problem, &state.x, kind, momentum_norm(&state), optimum)
        };
        let status = if blown_up {
            RunStatus::Diverged
        } else if done(ortho, grad) {
            RunStatus::Converged
        } else if state.k >= config.max_iter || budget.max_time.is_some_and(|t| elapsed >= t) {
            RunStatus::Budget
        } else {
            RunStatus::Running
        };
        trace.rows.push(TraceRow {
            iter: state.k,
            time_s: elapsed.as_secs_f64(),
            f,
            ortho_err: ortho,
            grad_norm: grad,
            dist_opt: dist,
            eta,
            status,
        });
    }
    Ok(RunOutput { trace, x: state.x })
}
