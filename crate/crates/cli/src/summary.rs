//! Per-method aggregates over traces.
//!
//! Runs are grouped by their label with any `#s<seed>` suffix removed. Every
//! statistic is a median over the runs of a group and depends only on the set
//! of rows of each run, not on their order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use landing_core::{RunStatus, RunTrace, TraceRow};

use crate::csvio::format_float;
use crate::error::CliError;

/// Event counted by the iterations-to-threshold column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    None,
    DistOpt(f64),
    /// `f <= factor · f(iter 0)`.
    RelativeLoss(f64),
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub runs: usize,
    pub converged: usize,
    pub diverged: usize,
    pub final_f: f64,
    pub final_ortho_err: f64,
    pub final_grad_norm: f64,
    pub final_dist_opt: f64,
    pub iterations: f64,
    /// `inf` when fewer than half of the runs reach the threshold.
    pub iters_to_threshold: f64,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "method",
    "runs",
    "converged",
    "diverged",
    "final_f",
    "final_ortho_err",
    "final_grad_norm",
    "final_dist_opt",
    "iterations",
    "iters_to_threshold",
];

pub fn group_of(label: &str) -> &str {
    match label.rfind("#s") {
        Some(i) if label[i + 2..].chars().all(|c| c.is_ascii_digit()) && i + 2 < label.len() => {
            &label[..i]
        }
        _ => label,
    }
}

/// Median with NaN ordered above every number.
pub fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn final_row(trace: &RunTrace) -> Option<&TraceRow> {
    trace.rows.iter().max_by_key(|r| r.iter)
}

pub fn iters_to_threshold(trace: &RunTrace, threshold: Threshold) -> Option<usize> {
    let hit = |r: &TraceRow| match threshold {
        Threshold::None => false,
        Threshold::DistOpt(tol) => r.dist_opt <= tol,
        Threshold::RelativeLoss(factor) => trace
            .rows
            .iter()
            .find(|r0| r0.iter == 0)
            .is_some_and(|r0| r.f <= factor * r0.f),
        Threshold::Converged => r.status == RunStatus::Converged,
    };
    trace.rows.iter().filter(|r| hit(r)).map(|r| r.iter).min()
}

pub fn summarize(traces: &[RunTrace], threshold: Threshold) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<&str, Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry(group_of(&t.method)).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(group, runs)| {
            let finals: Vec<&TraceRow> = runs.iter().filter_map(|t| final_row(t)).collect();
            let stat = |f: fn(&TraceRow) -> f64| median(finals.iter().map(|r| f(r)).collect());
            let count = |s: RunStatus| finals.iter().filter(|r| r.status == s).count();
            SummaryRow {
                group: group.to_string(),
                runs: runs.len(),
                converged: count(RunStatus::Converged),
                diverged: count(RunStatus::Diverged),
                final_f: stat(|r| r.f),
                final_ortho_err: stat(|r| r.ortho_err),
                final_grad_norm: stat(|r| r.grad_norm),
                final_dist_opt: stat(|r| r.dist_opt),
                iterations: stat(|r| r.iter as f64),
                iters_to_threshold: median(
                    runs.iter()
                        .map(|t| {
                            iters_to_threshold(t, threshold).map_or(f64::INFINITY, |k| k as f64)
                        })
                        .collect(),
                ),
            }
        })
        .collect()
}

pub fn write_summary_to<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.runs.to_string(),
            r.converged.to_string(),
            r.diverged.to_string(),
            format_float(r.final_f),
            format_float(r.final_ortho_err),
            format_float(r.final_grad_norm),
            format_float(r.final_dist_opt),
            format_float(r.iterations),
            format_float(r.iters_to_threshold),
        ])?;
    }
    w.flush().map_err(|e| CliError::Csv(e.to_string()))
}

pub fn write_summary(
    traces: &[RunTrace],
    threshold: Threshold,
    path: &Path,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_summary_to(BufWriter::new(file), &summarize(traces, threshold))
}

/// Fixed-width table for the terminal.
pub fn render(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<28} {:>5} {:>5} {:>5} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9}\n",
        "method",
        "runs",
        "conv",
        "div",
        "f",
        "ortho_err",
        "grad_norm",
        "dist_opt",
        "iters",
        "to_thr"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<28} {:>5} {:>5} {:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9} {:>9}\n",
            r.group,
            r.runs,
            r.converged,
            r.diverged,
            r.final_f,
            r.final_ortho_err,
            r.final_grad_norm,
            r.final_dist_opt,
            r.iterations,
            r.iters_to_threshold,
        ));
    }
    out
}
