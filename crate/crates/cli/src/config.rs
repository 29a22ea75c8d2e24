//! Experiment manifests.
//!
//! A manifest is a TOML file with optional top-level keys (`seed`,
//! `precision`, `methods`, `out`, `summary`, `record_every`) and one optional
//! table per experiment. Every table field has a default, unknown keys are
//! rejected, and command-line flags override the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use landing_core::{Method, Precision};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Procrustes,
    OrthoStep,
    Plam,
    Distill,
    Stiefel,
    SafeRuleStress,
    ScheduleRates,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Procrustes,
        Experiment::OrthoStep,
        Experiment::Plam,
        Experiment::Distill,
        Experiment::Stiefel,
        Experiment::SafeRuleStress,
        Experiment::ScheduleRates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Procrustes => "procrustes",
            Experiment::OrthoStep => "ortho-step",
            Experiment::Plam => "plam",
            Experiment::Distill => "distill",
            Experiment::Stiefel => "stiefel",
            Experiment::SafeRuleStress => "safe-rule-stress",
            Experiment::ScheduleRates => "schedule-rates",
        }
    }

    pub fn default_methods(self) -> &'static [&'static str] {
        match self {
            Experiment::Procrustes => &["landing", "exp", "projection", "cayley", "qr"],
            Experiment::OrthoStep => &["landing", "exp", "projection", "cayley", "qr"],
            Experiment::Plam => &["plam", "landing"],
            Experiment::Distill => &["landing", "momentum", "exp"],
            Experiment::Stiefel => &["landing", "qr", "projection"],
            Experiment::SafeRuleStress | Experiment::ScheduleRates => &["landing"],
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub precision: Option<String>,
    pub methods: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Keep every n-th trace row (plus the first and last); 0 means 1.
    pub record_every: Option<usize>,
    pub procrustes: ProcrustesParams,
    pub ortho_step: OrthoStepParams,
    pub plam: PlamParams,
    pub distill: DistillParams,
    pub stiefel: StiefelParams,
    pub safe_rule_stress: SafeRuleParams,
    pub schedule_rates: ScheduleParams,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcrustesParams {
    pub p: usize,
    pub eta: f64,
    pub lambda: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Independent instances, seeded `seed, seed + 1, ...`.
    pub seeds: usize,
    /// `"right"` for `‖XA - B‖²`, `"left"` for `‖AX - B‖²`.
    pub side: String,
    /// Momentum weight of the `momentum` method.
    pub gamma: f64,
    /// Wall-time budget per run.
    pub max_time_s: Option<f64>,
}

impl Default for ProcrustesParams {
    fn default() -> Self {
        Self {
            p: 40,
            eta: 0.1,
            lambda: 1.0,
            eps: 0.5,
            max_iter: 5000,
            seeds: 1,
            side: "right".into(),
            gamma: 0.9,
            max_time_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrthoStepParams {
    pub p: usize,
    pub sigma: f64,
    pub eta: f64,
    pub lambda: f64,
    /// Scales of the random skew direction.
    pub gammas: Vec<f64>,
    pub seeds: usize,
}

impl Default for OrthoStepParams {
    fn default() -> Self {
        Self {
            p: 100,
            sigma: 1e-4,
            eta: 0.3,
            lambda: 1.0,
            gammas: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            seeds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlamParams {
    pub p: usize,
    pub instances: usize,
    pub eta: f64,
    pub lambda: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub ortho_tol: f64,
}

impl Default for PlamParams {
    fn default() -> Self {
        Self {
            p: 2,
            instances: 10,
            eta: 1e-3,
            lambda: 1.0,
            max_iter: 100_000,
            grad_tol: 1e-6,
            ortho_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillParams {
    pub width: usize,
    pub depth: usize,
    pub batch: usize,
    pub iterations: usize,
    pub bias_scale: f64,
    pub eta: f64,
    pub lambda: f64,
    pub eps: f64,
    /// Momentum weight of the `momentum` method.
    pub gamma: f64,
    pub seeds: usize,
    pub eval_size: usize,
    pub eval_every: usize,
    /// Width 100, depth 10, batch 256, 10000 iterations.
    pub full_scale: bool,
}

impl Default for DistillParams {
    fn default() -> Self {
        Self {
            width: 32,
            depth: 4,
            batch: 64,
            iterations: 2000,
            bias_scale: 0.1,
            eta: 0.5,
            lambda: 1.0,
            eps: 0.5,
            gamma: 0.9,
            seeds: 1,
            eval_size: 512,
            eval_every: 1,
            full_scale: false,
        }
    }
}

impl DistillParams {
    /// Applies `full_scale`.
    pub fn effective(&self) -> DistillParams {
        if self.full_scale {
            DistillParams {
                width: 100,
                depth: 10,
                batch: 256,
                iterations: 10_000,
                ..self.clone()
            }
        } else {
            self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StiefelParams {
    pub n: usize,
    pub p: usize,
    pub eta: f64,
    pub lambda: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub seeds: usize,
    pub grad_tol: f64,
    pub ortho_tol: f64,
}

impl Default for StiefelParams {
    fn default() -> Self {
        Self {
            n: 100,
            p: 10,
            eta: 0.1,
            lambda: 1.0,
            eps: 0.5,
            max_iter: 3000,
            seeds: 1,
            grad_tol: 1e-10,
            ortho_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeRuleParams {
    pub trials: usize,
    /// Sizes are drawn uniformly from `2..=max_p`.
    pub max_p: usize,
    pub eps: f64,
    pub lambda: f64,
    /// `‖A‖_F` is drawn uniformly from `[0, max_a]`.
    pub max_a: f64,
}

impl Default for SafeRuleParams {
    fn default() -> Self {
        Self {
            trials: 10_000,
            max_p: 10,
            eps: 0.5,
            lambda: 1.0,
            max_a: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleParams {
    pub p: usize,
    /// Step scale `c` in `η_k = c·k^{-α}`.
    pub c: f64,
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Stop once `‖ψ‖² <= grad_sq_tol` and `N(X) <= penalty_tol`.
    pub grad_sq_tol: f64,
    pub penalty_tol: f64,
    pub seeds: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            p: 10,
            c: 1.0,
            alphas: vec![2.0 / 3.0],
            lambda: 1.0,
            eps: 0.5,
            max_iter: 100_000,
            grad_sq_tol: 1e-4,
            penalty_tol: 1e-4,
            seeds: 1,
        }
    }
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub precision: Option<String>,
    pub methods: Option<String>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub full_scale: bool,
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub precision: Precision,
    pub methods: Vec<Method>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub record_every: usize,
    pub params: ConfigFile,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self::resolve(experiment, ConfigFile::default(), &Overrides::default())
            .expect("default configuration is valid")
    }

    pub fn load(
        experiment: Experiment,
        path: Option<&Path>,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let file = match path {
            Some(path) => parse_file(path)?,
            None => ConfigFile::default(),
        };
        Self::resolve(experiment, file, overrides)
    }

    pub fn resolve(
        experiment: Experiment,
        mut file: ConfigFile,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let precision = match overrides.precision.as_ref().or(file.precision.as_ref()) {
            Some(s) => s.parse::<Precision>().map_err(CliError::Config)?,
            None => Precision::Fp64,
        };
        let names: Vec<String> = match (&overrides.methods, &file.methods) {
            (Some(list), _) => list.split(',').map(|s| s.trim().to_string()).collect(),
            (None, Some(list)) => list.clone(),
            (None, None) => experiment
                .default_methods()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };
        let methods = names
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<Method>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if methods.is_empty() {
            return Err(CliError::Config("method list is empty".into()));
        }
        if overrides.full_scale {
            file.distill.full_scale = true;
        }
        let config = Self {
            experiment,
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            precision,
            methods,
            out: overrides.out.clone().or(file.out.clone()),
            summary: overrides.summary.clone().or(file.summary.clone()),
            record_every: file.record_every.unwrap_or(1).max(1),
            params: file,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        let allowed = |m: Method| -> bool {
            match self.experiment {
                Experiment::Procrustes => !matches!(m, Method::StochasticLanding),
                Experiment::OrthoStep => matches!(m, Method::Landing | Method::Rgd(_)),
                Experiment::Plam => !matches!(m, Method::StochasticLanding),
                Experiment::Distill => {
                    matches!(
                        m,
                        Method::Landing | Method::MomentumLanding | Method::Rgd(_)
                    )
                }
                Experiment::Stiefel => match m {
                    Method::Rgd(r) => r.supports_stiefel(),
                    Method::Landing | Method::Plam | Method::PenaltyGd => true,
                    _ => false,
                },
                Experiment::SafeRuleStress => m == Method::Landing,
                Experiment::ScheduleRates => {
                    matches!(m, Method::Landing | Method::MomentumLanding)
                }
            }
        };
        if let Some(m) = self.methods.iter().find(|m| !allowed(**m)) {
            return bad(format!(
                "method `{m}` is not available for `{}`",
                self.experiment.name()
            ));
        }
        let p = &self.params;
        match self.experiment {
            Experiment::Procrustes => {
                let c = &p.procrustes;
                positive("procrustes.eta", c.eta)?;
                positive("procrustes.lambda", c.lambda)?;
                check_eps(c.eps)?;
                if c.p == 0 || c.seeds == 0 {
                    return bad("procrustes.p and procrustes.seeds must be positive".into());
                }
                if c.side != "right" && c.side != "left" {
                    return bad(format!(
                        "procrustes.side must be `right` or `left`, got `{}`",
                        c.side
                    ));
                }
            }
            Experiment::OrthoStep => {
                let c = &p.ortho_step;
                positive("ortho_step.eta", c.eta)?;
                positive("ortho_step.lambda", c.lambda)?;
                positive("ortho_step.sigma", c.sigma)?;
                if c.gammas.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                    return bad("ortho_step.gammas must be non-negative".into());
                }
                if c.p == 0 || c.seeds == 0 || c.gammas.is_empty() {
                    return bad("ortho_step.p, seeds and gammas must be non-empty".into());
                }
            }
            Experiment::Plam => {
                let c = &p.plam;
                positive("plam.eta", c.eta)?;
                positive("plam.lambda", c.lambda)?;
                if c.p == 0 {
                    return bad("plam.p must be positive".into());
                }
            }
            Experiment::Distill => {
                let c = &p.distill;
                positive("distill.eta", c.eta)?;
                positive("distill.lambda", c.lambda)?;
                check_eps(c.eps)?;
                if !(0.0..=1.0).contains(&c.gamma) || c.gamma == 0.0 {
                    return bad(format!("distill.gamma must lie in (0, 1], got {}", c.gamma));
                }
                if c.width == 0 || c.depth == 0 || c.batch == 0 || c.seeds == 0 {
                    return bad("distill.width, depth, batch and seeds must be positive".into());
                }
            }
            Experiment::Stiefel => {
                let c = &p.stiefel;
                positive("stiefel.eta", c.eta)?;
                positive("stiefel.lambda", c.lambda)?;
                check_eps(c.eps)?;
                if c.p == 0 || c.n < c.p || c.seeds == 0 {
                    return bad(format!(
                        "stiefel needs 0 < p <= n, got n = {}, p = {}",
                        c.n, c.p
                    ));
                }
            }
            Experiment::SafeRuleStress => {
                let c = &p.safe_rule_stress;
                positive("safe_rule_stress.lambda", c.lambda)?;
                check_eps(c.eps)?;
                if c.max_p < 2 || c.max_a.is_nan() || c.max_a < 0.0 {
                    return bad("safe_rule_stress needs max_p >= 2 and max_a >= 0".into());
                }
            }
            Experiment::ScheduleRates => {
                let c = &p.schedule_rates;
                positive("schedule_rates.c", c.c)?;
                positive("schedule_rates.lambda", c.lambda)?;
                check_eps(c.eps)?;
                if let Some(a) = c.alphas.iter().find(|a| !(**a > 0.5 && **a < 1.0)) {
                    return bad(format!(
                        "schedule_rates.alphas must lie in (1/2, 1), got {a}"
                    ));
                }
                if c.p == 0 || c.alphas.is_empty() || c.seeds == 0 {
                    return bad("schedule_rates.p, alphas and seeds must be non-empty".into());
                }
            }
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "eps must lie in (0, 1), got {eps}"
        )))
    }
}

pub fn parse_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_str(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}
