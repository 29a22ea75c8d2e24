//! Experiment runners.
//!
//! Each runner expands its configuration into independent (instance, method)
//! jobs, runs them in parallel on a pool capped by `LANDING_THREADS` and
//! returns the traces in job order, so output does not depend on scheduling.
//! Instance `s` of a multi-instance experiment is seeded with `seed + s` and
//! its traces are labelled `<method>#s<s>`.

use std::time::Duration;

use landing_core::geometry::{residual, GeometryKind};
use landing_core::landing::safe_step_size;
use landing_core::problems::{
    single_step_experiment, train_distillation, DistillOptions, Distillation, Procrustes, Side,
    SingleStep, StepMethod, StiefelProcrustes,
};
use landing_core::{
    run, Budget, Matrix, Method, OptimizerConfig, Precision, Real, RngState, RunStatus, RunTrace,
    StepSchedule, TraceRow,
};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::csvio::thin;
use crate::error::CliError;
use crate::summary::{median, Threshold};

pub const THREADS_ENV: &str = "LANDING_THREADS";

#[derive(Debug, Clone)]
pub struct Report {
    pub traces: Vec<RunTrace>,
    pub threshold: Threshold,
    /// Experiment-specific lines for the terminal.
    pub notes: Vec<String>,
}

/// Parallel runs allowed by `LANDING_THREADS`; unset or 0 lets the pool decide.
pub fn thread_count() -> Result<usize, CliError> {
    parse_thread_count(std::env::var(THREADS_ENV).ok().as_deref())
}

pub fn parse_thread_count(raw: Option<&str>) -> Result<usize, CliError> {
    match raw.map(str::trim) {
        Some(v) if !v.is_empty() => v.parse().map_err(|_| {
            CliError::Config(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
        _ => Ok(0),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    run_experiment_on(config, thread_count()?)
}

/// Runs on a pool of `threads` workers (0 = one per core).
pub fn run_experiment_on(config: &ExperimentConfig, threads: usize) -> Result<Report, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = pool.install(|| match config.precision {
        Precision::Fp32 => dispatch::<f32>(config),
        Precision::Fp64 => dispatch::<f64>(config),
    })?;
    for t in &mut report.traces {
        thin(t, config.record_every);
    }
    Ok(report)
}

fn dispatch<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    match config.experiment {
        Experiment::Procrustes => procrustes::<T>(config),
        Experiment::OrthoStep => ortho_step::<T>(config),
        Experiment::Plam => plam::<T>(config),
        Experiment::Distill => distill::<T>(config),
        Experiment::Stiefel => stiefel::<T>(config),
        Experiment::SafeRuleStress => safe_rule_stress::<T>(config),
        Experiment::ScheduleRates => schedule_rates::<T>(config),
    }
}

fn label(method: &str, instance: usize, instances: usize) -> String {
    if instances > 1 {
        format!("{method}#s{instance}")
    } else {
        method.to_string()
    }
}

fn jobs(instances: usize, methods: &[Method]) -> Vec<(usize, Method)> {
    (0..instances)
        .flat_map(|s| methods.iter().map(move |&m| (s, m)))
        .collect()
}

fn par_traces<J: Sync>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<RunTrace, CliError> + Sync + Send,
) -> Result<Vec<RunTrace>, CliError> {
    jobs.par_iter().map(f).collect()
}

fn seeded(config: &ExperimentConfig, instance: usize) -> RngState {
    RngState::new(config.seed.wrapping_add(instance as u64))
}

fn procrustes<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.procrustes;
    let side = if c.side == "left" {
        Side::Left
    } else {
        Side::Right
    };
    let traces = par_traces(&jobs(c.seeds, &config.methods), |&(s, method)| {
        let mut rng = seeded(config, s);
        let problem = Procrustes::<T>::random(c.p, side, &mut rng)?;
        let x0 = problem.start_point(&mut rng);
        let opt = OptimizerConfig {
            lambda: c.lambda,
            eps: c.eps,
            schedule: StepSchedule::Constant(c.eta),
            gamma: if method == Method::MomentumLanding {
                c.gamma
            } else {
                0.0
            },
            max_iter: c.max_iter,
            ..OptimizerConfig::default()
        };
        let budget = Budget {
            max_time: c.max_time_s.map(Duration::from_secs_f64),
            ..Budget::default()
        };
        let mut out = run(
            &problem,
            &x0,
            &opt,
            method,
            &budget,
            Some(problem.optimum()),
            &mut rng,
        )?;
        out.trace.method = label(method.name(), s, c.seeds);
        Ok(out.trace)
    })?;
    Ok(Report {
        traces,
        threshold: Threshold::DistOpt(1e-6),
        notes: Vec::new(),
    })
}

fn step_method(m: Method) -> StepMethod {
    match m {
        Method::Rgd(r) => StepMethod::Retraction(r),
        _ => StepMethod::Landing,
    }
}

/// Two-row trace: `ortho_err` before and after the step.
fn single_step_trace(method: String, step: SingleStep, eta: f64) -> RunTrace {
    let row = |iter, ortho_err, eta, status| TraceRow {
        iter,
        time_s: 0.0,
        f: f64::NAN,
        ortho_err,
        grad_norm: f64::NAN,
        dist_opt: f64::NAN,
        eta,
        status,
    };
    RunTrace {
        method,
        rows: vec![
            row(0, step.residual_in, 0.0, RunStatus::Running),
            row(1, step.residual_out, eta, RunStatus::Budget),
        ],
    }
}

fn ortho_step<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.ortho_step;
    let jobs: Vec<(f64, usize, Method)> = c
        .gammas
        .iter()
        .flat_map(|&g| {
            jobs(c.seeds, &config.methods)
                .into_iter()
                .map(move |(s, m)| (g, s, m))
        })
        .collect();
    let traces = par_traces(&jobs, |&(gamma, s, method)| {
        let mut rng = seeded(config, s);
        let step = single_step_experiment::<T>(
            c.p,
            c.sigma,
            gamma,
            c.eta,
            c.lambda,
            step_method(method),
            &mut rng,
        )?;
        Ok(single_step_trace(
            format!("{}@gamma={gamma:e}#s{s}", method.name()),
            step,
            c.eta,
        ))
    })?;
    let mut notes = Vec::new();
    for &gamma in &c.gammas {
        for method in &config.methods {
            let prefix = format!("{}@gamma={gamma:e}#", method.name());
            let ratios: Vec<f64> = traces
                .iter()
                .filter(|t| t.method.starts_with(&prefix))
                .map(|t| t.rows[1].ortho_err / t.rows[0].ortho_err)
                .collect();
            notes.push(format!(
                "{:<12} gamma = {gamma:<8e} median residual ratio out/in = {:.4e}",
                method.name(),
                median(ratios)
            ));
        }
    }
    Ok(Report {
        traces,
        threshold: Threshold::None,
        notes,
    })
}

fn plam<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.plam;
    let traces = par_traces(&jobs(c.instances, &config.methods), |&(s, method)| {
        let mut rng = seeded(config, s);
        let problem = Procrustes::<T>::random_unscaled(c.p, Side::Left, &mut rng)?;
        let opt = OptimizerConfig {
            lambda: c.lambda,
            schedule: StepSchedule::Constant(c.eta),
            max_iter: c.max_iter,
            ..OptimizerConfig::default()
        };
        let budget = Budget {
            grad_tol: Some(c.grad_tol),
            ortho_tol: Some(c.ortho_tol),
            ..Budget::default()
        };
        let x0 = Matrix::<T>::identity(c.p);
        let mut out = run(
            &problem,
            &x0,
            &opt,
            method,
            &budget,
            Some(problem.optimum()),
            &mut rng,
        )?;
        out.trace.method = format!("{}#s{s}", method.name());
        Ok(out.trace)
    })?;
    let notes = (0..c.instances)
        .map(|s| {
            let statuses: Vec<String> = traces
                .iter()
                .filter(|t| t.method.ends_with(&format!("#s{s}")))
                .map(|t| {
                    let last = t.last().expect("runs record their start");
                    format!(
                        "{}={} (iter {})",
                        crate::summary::group_of(&t.method),
                        last.status,
                        last.iter
                    )
                })
                .collect();
            format!("instance {s:>2}: {}", statuses.join("  "))
        })
        .collect();
    Ok(Report {
        traces,
        threshold: Threshold::Converged,
        notes,
    })
}

fn distill<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = config.params.distill.effective();
    let options = DistillOptions {
        iterations: c.iterations,
        eval_size: c.eval_size,
        eval_every: c.eval_every,
    };
    let traces = par_traces(&jobs(c.seeds, &config.methods), |&(s, method)| {
        let mut rng = seeded(config, s);
        let problem = Distillation::<T>::new(c.width, c.depth, c.batch, c.bias_scale, &mut rng)?;
        let student = problem.student(&mut rng);
        let opt = OptimizerConfig {
            lambda: c.lambda,
            eps: c.eps,
            schedule: StepSchedule::Constant(c.eta),
            gamma: if method == Method::MomentumLanding {
                c.gamma
            } else {
                0.0
            },
            max_iter: c.iterations,
            ..OptimizerConfig::default()
        };
        let (mut trace, _) =
            train_distillation(&problem, student, method, &opt, &options, &mut rng)?;
        trace.method = label(method.name(), s, c.seeds);
        Ok(trace)
    })?;
    Ok(Report {
        traces,
        threshold: Threshold::RelativeLoss(0.1),
        notes: Vec::new(),
    })
}

fn stiefel<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.stiefel;
    let traces = par_traces(&jobs(c.seeds, &config.methods), |&(s, method)| {
        let mut rng = seeded(config, s);
        let problem = StiefelProcrustes::<T>::random(c.n, c.p, &mut rng)?;
        let x0 = rng.stiefel::<T>(c.n, c.p);
        let opt = OptimizerConfig {
            lambda: c.lambda,
            eps: c.eps,
            schedule: StepSchedule::Constant(c.eta),
            max_iter: c.max_iter,
            ..OptimizerConfig::default()
        };
        let budget = Budget {
            grad_tol: Some(c.grad_tol),
            ortho_tol: Some(c.ortho_tol),
            ..Budget::default()
        };
        let mut out = run(
            &problem,
            &x0,
            &opt,
            method,
            &budget,
            Some(problem.optimum()),
            &mut rng,
        )?;
        out.trace.method = label(method.name(), s, c.seeds);
        Ok(out.trace)
    })?;
    Ok(Report {
        traces,
        threshold: Threshold::DistOpt(1e-6),
        notes: Vec::new(),
    })
}

/// `(I + S)^{1/2} Q` with `S` symmetric of norm `d` (eigenvalues clipped
/// above -1), so that `‖XXᵀ - I‖_F = ‖S‖_F`.
fn point_at_residual<T: Real>(p: usize, d: f64, rng: &mut RngState) -> Matrix<T> {
    let q = rng.orthogonal::<T>(p);
    let v = rng.orthogonal::<T>(p);
    let mut eig: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
    let norm = eig
        .iter()
        .map(|e| e * e)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let root: Vec<T> = eig
        .iter_mut()
        .map(|e| T::from_f64((1.0 + (*e * d / norm).max(-0.999)).sqrt()))
        .collect();
    v.matmul(&Matrix::from_diag(&root)).matmul_t(&v).matmul(&q)
}

/// Random single landing steps at a fraction of the safe step.
///
/// Row `i` is trial `i`: `grad_norm` holds `‖A‖_F`, `eta` the step taken and
/// `ortho_err` the residual after it. Status is `converged` when the new
/// residual is within `eps` and `diverged` otherwise.
fn safe_rule_stress<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.safe_rule_stress;
    let rows = (0..c.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngState::new(config.seed).fork(i as u64);
            let p = 2 + rng.index(c.max_p - 1);
            let kind = GeometryKind::Orthogonal(p);
            let x = point_at_residual::<T>(p, c.eps * rng.uniform(), &mut rng);
            let delta = residual(&x, kind);
            let d = delta.norm().to_f64();
            let mut a = rng.skew::<T>(p, 1.0);
            let scale = c.max_a * rng.uniform() / a.norm().to_f64().max(f64::MIN_POSITIVE);
            a = a.scale(T::from_f64(scale));
            let a_norm = a.norm().to_f64();
            let eta = safe_step_size(a_norm, d, c.eps, c.lambda)?.value().min(1e3) * rng.uniform();
            let mut dir = delta.scale(T::from_f64(c.lambda));
            dir += &a;
            let mut next = x.clone();
            next.axpy(T::from_f64(-eta), &dir.matmul(&x));
            let after = residual(&next, kind).norm().to_f64();
            Ok(TraceRow {
                iter: i,
                time_s: 0.0,
                f: f64::NAN,
                ortho_err: after,
                grad_norm: a_norm,
                dist_opt: f64::NAN,
                eta,
                status: if after <= c.eps * (1.0 + 1e-12) {
                    RunStatus::Converged
                } else {
                    RunStatus::Diverged
                },
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let violations = rows
        .iter()
        .filter(|r| r.status == RunStatus::Diverged)
        .count();
    let worst = rows.iter().map(|r| r.ortho_err).fold(0.0, f64::max);
    Ok(Report {
        traces: vec![RunTrace {
            method: "landing".into(),
            rows,
        }],
        threshold: Threshold::None,
        notes: vec![format!(
            "{violations} of {} steps left the safe region (largest residual {worst:.6e}, eps {})",
            c.trials, c.eps
        )],
    })
}

fn schedule_rates<T: Real>(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.params.schedule_rates;
    let jobs: Vec<(f64, usize, Method)> = c
        .alphas
        .iter()
        .flat_map(|&a| {
            jobs(c.seeds, &config.methods)
                .into_iter()
                .map(move |(s, m)| (a, s, m))
        })
        .collect();
    let traces = par_traces(&jobs, |&(alpha, s, method)| {
        let mut rng = seeded(config, s);
        let problem = Procrustes::<T>::random(c.p, Side::Right, &mut rng)?;
        let x0 = problem.start_point(&mut rng);
        let opt = OptimizerConfig {
            lambda: c.lambda,
            eps: c.eps,
            schedule: StepSchedule::PowerDecay { c: c.c, alpha },
            max_iter: c.max_iter,
            ..OptimizerConfig::default()
        };
        // N(X) = ‖Δ‖²/4.
        let budget = Budget {
            grad_tol: Some(c.grad_sq_tol.sqrt()),
            ortho_tol: Some(2.0 * c.penalty_tol.sqrt()),
            ..Budget::default()
        };
        let mut out = run(
            &problem,
            &x0,
            &opt,
            method,
            &budget,
            Some(problem.optimum()),
            &mut rng,
        )?;
        out.trace.method = label(&format!("{}@alpha={alpha:.4}", method.name()), s, c.seeds);
        Ok(out.trace)
    })?;
    let notes = traces
        .iter()
        .map(|t| {
            let best = t
                .rows
                .iter()
                .map(|r| r.grad_norm * r.grad_norm)
                .fold(f64::INFINITY, f64::min);
            let last = t.last().expect("runs record their start");
            format!(
                "{:<24} min |psi|^2 = {best:.3e}  final N = {:.3e}  status {} at iter {}",
                t.method,
                0.25 * last.ortho_err * last.ortho_err,
                last.status,
                last.iter
            )
        })
        .collect();
    Ok(Report {
        traces,
        threshold: Threshold::Converged,
        notes,
    })
}
