use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{ortho_residual, relative_gradient_from, GeometryKind};
use crate::landing::{
    landing_update, momentum_update, Method, OptimizerConfig, OptimizerState, RunStatus, RunTrace,
    TraceRow, DIVERGENCE_NORM,
};
use crate::linalg::{Matrix, Real, RngState};
use crate::retractions::retract;

/// Weights and biases of a `tanh` network `x_{n+1} = tanh(W_n x_n + b_n)`.
/// Biases are `p x 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Matrix<T>>,
}

impl<T: Real> Mlp<T> {
    /// Haar-random orthogonal weights and `N(0, bias_scale²)` biases.
    pub fn random(width: usize, depth: usize, bias_scale: f64, rng: &mut RngState) -> Self {
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for _ in 0..depth {
            weights.push(rng.orthogonal(width));
            biases.push(rng.gaussian::<T>(width, 1).scale(T::from_f64(bias_scale)));
        }
        Self { weights, biases }
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Activations of every layer for a batch stored column-wise; entry 0 is
    /// the input itself.
    pub fn forward(&self, inputs: &Matrix<T>) -> Vec<Matrix<T>> {
        let mut acts = Vec::with_capacity(self.depth() + 1);
        acts.push(inputs.clone());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let mut z = w.matmul(acts.last().expect("input is present"));
            let cols = z.cols();
            for (i, row) in z.as_mut_slice().chunks_mut(cols).enumerate() {
                let bi = b[(i, 0)];
                row.iter_mut().for_each(|v| *v = (*v + bi).tanh());
            }
            acts.push(z);
        }
        acts
    }

    pub fn output(&self, inputs: &Matrix<T>) -> Matrix<T> {
        self.forward(inputs).pop().expect("non-empty activations")
    }
}

/// Gradients of the batch loss with respect to every layer.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Matrix<T>>,
}

/// Student-teacher regression with orthogonal weights:
/// `L(θ) = mean_q ‖Φ_θ(x_q) - Φ_θ*(x_q)‖²`, `x_q ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct Distillation<T> {
    teacher: Mlp<T>,
    width: usize,
    batch: usize,
    bias_scale: f64,
}

impl<T: Real> Distillation<T> {
    pub fn new(
        width: usize,
        depth: usize,
        batch: usize,
        bias_scale: f64,
        rng: &mut RngState,
    ) -> Result<Self> {
        if width == 0 || depth == 0 || batch == 0 {
            return Err(Error::Config(format!(
                "distillation needs positive sizes, got width {width}, depth {depth}, batch {batch}"
            )));
        }
        let teacher = Mlp::random(width, depth, bias_scale, rng);
        for w in &teacher.weights {
            debug_assert!(ortho_residual(w, GeometryKind::Orthogonal(width)) <= T::tol(1e-10));
        }
        Ok(Self {
            teacher,
            width,
            batch,
            bias_scale,
        })
    }

    pub fn teacher(&self) -> &Mlp<T> {
        &self.teacher
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.teacher.depth()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Fresh student drawn from the teacher's distribution.
    pub fn student(&self, rng: &mut RngState) -> Mlp<T> {
        Mlp::random(self.width, self.depth(), self.bias_scale, rng)
    }

    /// `width x batch` standard normal inputs.
    pub fn sample_batch(&self, rng: &mut RngState) -> Matrix<T> {
        rng.gaussian(self.width, self.batch)
    }

    /// `n` inputs drawn as one block, for held-out evaluation.
    pub fn sample_inputs(&self, n: usize, rng: &mut RngState) -> Matrix<T> {
        rng.gaussian(self.width, n)
    }

    pub fn loss(&self, student: &Mlp<T>, inputs: &Matrix<T>) -> T {
        self.loss_against(student, inputs, &self.teacher.output(inputs))
    }

    /// [`Distillation::loss`] with the teacher's outputs precomputed.
    pub fn loss_against(&self, student: &Mlp<T>, inputs: &Matrix<T>, target: &Matrix<T>) -> T {
        let r = student.output(inputs) - target;
        r.norm_sq() / T::from_f64(inputs.cols() as f64)
    }

    /// Batch loss and its gradients by reverse-mode accumulation.
    pub fn loss_and_grads(&self, student: &Mlp<T>, inputs: &Matrix<T>) -> (T, Gradients<T>) {
        let depth = student.depth();
        let acts = student.forward(inputs);
        let target = self.teacher.output(inputs);
        let scale = T::one() / T::from_f64(inputs.cols() as f64);
        let residual = &acts[depth] - &target;
        let loss = residual.norm_sq() * scale;

        let mut weights = vec![Matrix::zeros(1, 1); depth];
        let mut biases = vec![Matrix::zeros(1, 1); depth];
        // Gradient with respect to the current layer's output.
        let mut upstream = residual.scale(T::from_f64(2.0) * scale);
        for n in (0..depth).rev() {
            let out = &acts[n + 1];
            let mut dz = upstream;
            for (g, &h) in dz.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *g = *g * (T::one() - h * h);
            }
            weights[n] = dz.matmul_t(&acts[n]);
            let cols = dz.cols();
            biases[n] = Matrix::from_fn(dz.rows(), 1, |i, _| {
                dz.as_slice()[i * cols..(i + 1) * cols]
                    .iter()
                    .copied()
                    .sum()
            });
            upstream = student.weights[n].t_matmul(&dz);
        }
        (loss, Gradients { weights, biases })
    }
}

/// Options of [`train_distillation`] beyond the optimizer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillOptions {
    pub iterations: usize,
    /// Size of the held-out set used for the recorded loss.
    pub eval_size: usize,
    /// Record a row every `eval_every` iterations (and at the last one).
    pub eval_every: usize,
}

impl Default for DistillOptions {
    fn default() -> Self {
        Self {
            iterations: 2000,
            eval_size: 512,
            eval_every: 1,
        }
    }
}

/// Trains a student with `method` applied to every weight matrix; biases take
/// plain gradient steps with the schedule's nominal step.
///
/// Rows record the held-out loss as `f`, the largest per-layer `‖Δ‖` as
/// `ortho_err` and `sqrt(Σ‖ψ_n‖²)` on the last batch as `grad_norm`.
/// Supports the landing variants and the square retractions.
pub fn train_distillation<T: Real>(
    problem: &Distillation<T>,
    student: Mlp<T>,
    method: Method,
    config: &OptimizerConfig,
    options: &DistillOptions,
    rng: &mut RngState,
) -> Result<(RunTrace, Mlp<T>)> {
    config.validate()?;
    if !matches!(
        method,
        Method::Landing | Method::MomentumLanding | Method::Rgd(_)
    ) {
        return Err(Error::Unsupported("distillation with this method"));
    }
    let kind = GeometryKind::Orthogonal(problem.width());
    let every = options.eval_every.max(1);
    let mut eval_rng = rng.fork(0xE7A1);
    let eval = problem.sample_inputs(options.eval_size.max(1), &mut eval_rng);
    let eval_target = problem.teacher().output(&eval);
    let eval_loss = |m: &Mlp<T>| problem.loss_against(m, &eval, &eval_target).to_f64();

    let max_residual = |m: &Mlp<T>| {
        m.weights
            .iter()
            .map(|w| ortho_residual(w, kind).to_f64())
            .fold(0.0, f64::max)
    };
    let mut trace = RunTrace::new(method.name());
    let mut student = student;
    let mut states: Vec<OptimizerState<T>> = student
        .weights
        .iter()
        .map(|w| OptimizerState::new(w.clone()))
        .collect();
    trace.rows.push(TraceRow {
        iter: 0,
        time_s: 0.0,
        f: eval_loss(&student),
        ortho_err: max_residual(&student),
        grad_norm: f64::NAN,
        dist_opt: f64::NAN,
        eta: 0.0,
        status: if options.iterations == 0 {
            RunStatus::Budget
        } else {
            RunStatus::Running
        },
    });

    let mut elapsed = 0.0;
    let mut failed = false;
    for k in 0..options.iterations {
        let started = Instant::now();
        let batch = problem.sample_batch(rng);
        let (_, grads) = problem.loss_and_grads(&student, &batch);
        let nominal = config.schedule.eta(k + 1);
        let mut psi_sq = 0.0;
        let mut eta_used = f64::INFINITY;
        for (n, state) in states.iter_mut().enumerate() {
            let g = &grads.weights[n];
            psi_sq += relative_gradient_from(g, &state.x).norm_sq().to_f64();
            let step = match method {
                Method::Landing => {
                    landing_update(&state.x, g, config, state.k, kind).map(|(x, info)| {
                        state.x = x;
                        state.k += 1;
                        info.eta
                    })
                }
                Method::MomentumLanding => momentum_update(state, g, config, kind).map(|i| i.eta),
                Method::Rgd(r) => {
                    let psi = relative_gradient_from(g, &state.x);
                    retract(r, &state.x, &psi.scale(T::from_f64(-nominal))).map(|x| {
                        state.x = x;
                        state.k += 1;
                        nominal
                    })
                }
                _ => unreachable!("rejected above"),
            };
            match step {
                Ok(eta) => eta_used = eta_used.min(eta),
                Err(err @ Error::Config(_)) => return Err(err),
                Err(err) => {
                    log::warn!("{method} stopped at iteration {k}: {err}");
                    failed = true;
                    break;
                }
            }
            student.weights[n] = state.x.clone();
            student.biases[n].axpy(T::from_f64(-nominal), &grads.biases[n]);
        }
        elapsed += started.elapsed().as_secs_f64();

        let blown_up = failed
            || student
                .weights
                .iter()
                .any(|w| !w.is_finite() || w.norm().to_f64() > DIVERGENCE_NORM);
        let last = k + 1 == options.iterations;
        if !(blown_up || last || (k + 1) % every == 0) {
            continue;
        }
        let status = if blown_up {
            RunStatus::Diverged
        } else if last {
            RunStatus::Budget
        } else {
            RunStatus::Running
        };
        trace.rows.push(TraceRow {
            iter: k + 1,
            time_s: elapsed,
            f: if blown_up {
                f64::NAN
            } else {
                eval_loss(&student)
            },
            ortho_err: max_residual(&student),
            grad_norm: psi_sq.sqrt(),
            dist_opt: f64::NAN,
            eta: eta_used,
            status,
        });
        if blown_up {
            break;
        }
    }
    Ok((trace, student))
}
