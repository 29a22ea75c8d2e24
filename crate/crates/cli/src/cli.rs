//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use landing_core::RunStatus;

use crate::config::{Experiment, ExperimentConfig, Overrides};
use crate::csvio::write_trace_csv;
use crate::error::CliError;
use crate::experiments::run_experiment;
use crate::summary::{render, summarize, write_summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

/// Per-run tables longer than this are left out of the terminal report.
const MAX_LISTED_RUNS: usize = 40;

#[derive(Debug, Parser)]
#[command(
    name = "landing",
    version,
    about = "Run landing-optimizer experiments and record CSV traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trace CSV destination.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Summary CSV destination.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["fp32", "fp64"])]
    precision: Option<String>,
    /// Comma-separated method names.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Exit with status 2 when any run diverges.
    #[arg(long, global = true)]
    fail_on_diverge: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orthogonal Procrustes with landing and retraction methods.
    Procrustes,
    /// One step from a perturbed identity: residual before and after.
    OrthoStep,
    /// PLAM against landing on random 2x2 Procrustes instances.
    Plam,
    /// Teacher-student distillation of an orthogonal-weight MLP.
    Distill {
        /// Width 100, depth 10, batch 256, 10000 iterations.
        #[arg(long)]
        full_scale: bool,
    },
    /// Procrustes on the Stiefel manifold.
    Stiefel,
    /// Random single steps under the safe step-size rule.
    SafeRuleStress,
    /// Decaying step-size schedules on Procrustes.
    ScheduleRates,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Procrustes => Experiment::Procrustes,
            Command::OrthoStep => Experiment::OrthoStep,
            Command::Plam => Experiment::Plam,
            Command::Distill { .. } => Experiment::Distill,
            Command::Stiefel => Experiment::Stiefel,
            Command::SafeRuleStress => Experiment::SafeRuleStress,
            Command::ScheduleRates => Experiment::ScheduleRates,
        }
    }
}

/// Parses `args` (program name first), runs the experiment and returns the
/// process exit code.
pub fn main_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        precision: cli.precision.clone(),
        methods: cli.methods.clone(),
        out: cli.out.clone(),
        summary: cli.summary.clone(),
        full_scale: matches!(cli.command, Command::Distill { full_scale: true }),
    };
    let config =
        ExperimentConfig::load(cli.command.experiment(), cli.config.as_deref(), &overrides)?;
    log::info!(
        "running {} with seed {}",
        config.experiment.name(),
        config.seed
    );
    let report = run_experiment(&config)?;

    if let Some(path) = &config.out {
        write_trace_csv(&report.traces, path)?;
    }
    if let Some(path) = &config.summary {
        write_summary(&report.traces, report.threshold, path)?;
    }
    let io = |e: std::io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(
        stdout,
        "{} (seed {}, {})",
        config.experiment.name(),
        config.seed,
        config.precision.as_str()
    )
    .map_err(io)?;
    if report.traces.len() <= MAX_LISTED_RUNS {
        for t in &report.traces {
            if let Some(last) = t.last() {
                writeln!(
                    stdout,
                    "  {:<28} iter {:>7}  status {:<9}  f {:>12.5e}  ortho_err {:>11.4e}  dist_opt {:>11.4e}",
                    t.method, last.iter, last.status, last.f, last.ortho_err, last.dist_opt
                )
                .map_err(io)?;
            }
        }
    }
    for note in &report.notes {
        writeln!(stdout, "  {note}").map_err(io)?;
    }
    write!(
        stdout,
        "{}",
        render(&summarize(&report.traces, report.threshold))
    )
    .map_err(io)?;

    let diverged = report
        .traces
        .iter()
        .any(|t| t.status() == RunStatus::Diverged);
    Ok(if cli.fail_on_diverge && diverged {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::{main_with_args, EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK};
    use crate::config::{Experiment, ExperimentConfig};
    use crate::csvio::{read_trace_csv, write_trace_csv, HEADER};
    use crate::run_experiment;
    use landing_core::RunStatus;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("landing").chain(args.iter().copied());
        let code = main_with_args(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn small_procrustes(dir: &std::path::Path) -> std::path::PathBuf {
        let path = dir.join("small.toml");
        fs::write(&path, "[procrustes]\np = 6\nmax_iter = 50\n").unwrap();
        path
    }

    #[test]
    fn procrustes_csv_has_the_fixed_header_and_one_row_per_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_procrustes(dir.path());
        let out = dir.path().join("t.csv");
        let (code, stdout, _) = invoke(&[
            "procrustes",
            "--config",
            manifest.to_str().unwrap(),
            "--seed",
            "0",
            "--out",
            out.to_str().unwrap(),
            "--methods",
            "landing,qr",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(stdout.contains("landing"));
        let text = fs::read_to_string(&out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "method,iter,time_s,f,ortho_err,grad_norm,dist_opt,eta,status"
        );
        assert_eq!(HEADER.join(","), text.lines().next().unwrap());
        let traces = read_trace_csv(&out).unwrap();
        assert_eq!(
            traces.iter().map(|t| t.method.as_str()).collect::<Vec<_>>(),
            ["landing", "qr"]
        );
        for t in &traces {
            assert_eq!(
                t.rows.iter().map(|r| r.iter).collect::<Vec<_>>(),
                (0..=50).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(Experiment::Procrustes);
        cfg.params.procrustes.p = 5;
        cfg.params.procrustes.max_iter = 30;
        cfg.params.procrustes.seeds = 2;
        let report = run_experiment(&cfg).unwrap();
        let path = dir.path().join("rt.csv");
        write_trace_csv(&report.traces, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.len(), report.traces.len());
        for (a, b) in report.traces.iter().zip(&back) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.rows.len(), b.rows.len());
            for (x, y) in a.rows.iter().zip(&b.rows) {
                let bits = |r: &landing_core::TraceRow| {
                    [r.time_s, r.f, r.ortho_err, r.grad_norm, r.dist_opt, r.eta].map(f64::to_bits)
                };
                assert_eq!(bits(x), bits(y));
                assert_eq!((x.iter, x.status), (y.iter, y.status));
            }
        }
    }

    #[test]
    fn runs_are_deterministic_apart_from_wall_time() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_procrustes(dir.path());
        let read = |name: &str| {
            let out = dir.path().join(name);
            let (code, _, _) = invoke(&[
                "procrustes",
                "--config",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, EXIT_OK);
            read_trace_csv(&out)
                .unwrap()
                .into_iter()
                .map(|mut t| {
                    t.rows.iter_mut().for_each(|r| r.time_s = 0.0);
                    t
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(read("a.csv"), read("b.csv"));
    }

    #[test]
    fn unknown_subcommand_prints_usage_and_exits_1() {
        let (code, _, stderr) = invoke(&["frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(stderr.contains("Usage"), "{stderr}");
        let (code, stdout, _) = invoke(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(stdout.contains("procrustes") && stdout.contains("schedule-rates"));
    }

    #[test]
    fn config_errors_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.toml");
        fs::write(&bad, "[procrustes]\nq = 1\n").unwrap();
        assert_eq!(
            invoke(&["procrustes", "--config", bad.to_str().unwrap()]).0,
            EXIT_CONFIG
        );
        let missing = dir.path().join("missing.toml");
        assert_eq!(
            invoke(&["procrustes", "--config", missing.to_str().unwrap()]).0,
            EXIT_CONFIG
        );
        let manifest = small_procrustes(dir.path());
        let (code, _, stderr) = invoke(&[
            "procrustes",
            "--config",
            manifest.to_str().unwrap(),
            "--methods",
            "newton",
        ]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(stderr.contains("newton"));
        assert_eq!(invoke(&["stiefel", "--methods", "cayley"]).0, EXIT_CONFIG);
    }

    #[test]
    fn plam_summary_lists_instances_and_divergence_sets_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("plam.toml");
        fs::write(&manifest, "[plam]\nmax_iter = 3000\n").unwrap();
        let summary = dir.path().join("summary.csv");
        let args = [
            "plam",
            "--seed",
            "0",
            "--config",
            manifest.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ];
        let (code, stdout, _) = invoke(&args);
        assert_eq!(code, EXIT_OK);
        let instances = stdout
            .lines()
            .filter(|l| l.trim_start().starts_with("instance"))
            .count();
        assert_eq!(instances, 10);
        assert!(stdout.contains("plam=diverged"));
        let text = fs::read_to_string(&summary).unwrap();
        assert!(text.starts_with("method,runs,converged,diverged,"));
        assert_eq!(text.lines().count(), 3);

        let mut strict = args.to_vec();
        strict.push("--fail-on-diverge");
        assert_eq!(invoke(&strict).0, EXIT_DIVERGED);
    }

    #[test]
    fn single_step_traces_hold_residuals_before_and_after() {
        let mut cfg = ExperimentConfig::defaults(Experiment::OrthoStep);
        cfg.params.ortho_step.p = 8;
        cfg.params.ortho_step.seeds = 3;
        cfg.params.ortho_step.gammas = vec![0.0];
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.traces.len(), 3 * cfg.methods.len());
        for t in &report.traces {
            assert_eq!(t.rows.len(), 2);
            assert!(t.method.contains("@gamma=0e0#s"));
            if t.method.starts_with("landing") {
                let ratio = t.rows[1].ortho_err / t.rows[0].ortho_err;
                assert!((ratio - 0.4).abs() < 1e-3, "{ratio}");
            }
        }
    }

    #[test]
    fn thinning_and_statuses() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Stiefel);
        cfg.params.stiefel.n = 12;
        cfg.params.stiefel.p = 3;
        cfg.record_every = 10;
        let report = run_experiment(&cfg).unwrap();
        for t in &report.traces {
            assert_eq!(t.status(), RunStatus::Converged);
            let iters: Vec<usize> = t.rows.iter().map(|r| r.iter).collect();
            assert!(iters[1..iters.len() - 1].iter().all(|k| k % 10 == 0));
        }
    }
}
