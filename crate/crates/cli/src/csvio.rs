//! Trace CSV files.
//!
//! One row per recorded iterate, tagged by the run's `method` label. Floats
//! are written with 17 significant digits so that fp64 values survive a round
//! trip bit for bit; non-finite values appear as `NaN`, `inf` and `-inf`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use landing_core::{RunStatus, RunTrace, TraceRow};

use crate::error::CliError;

pub const HEADER: [&str; 9] = [
    "method",
    "iter",
    "time_s",
    "f",
    "ortho_err",
    "grad_norm",
    "dist_opt",
    "eta",
    "status",
];

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `traces` in order; an empty slice gives a header-only file.
pub fn write_traces<W: Write>(writer: W, traces: &[RunTrace]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for trace in traces {
        for r in &trace.rows {
            w.write_record([
                trace.method.clone(),
                r.iter.to_string(),
                format_float(r.time_s),
                format_float(r.f),
                format_float(r.ortho_err),
                format_float(r.grad_norm),
                format_float(r.dist_opt),
                format_float(r.eta),
                r.status.as_str().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::Csv(e.to_string()))
}

pub fn write_trace_csv(traces: &[RunTrace], path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_error(path))?;
    write_traces(BufWriter::new(file), traces)
}

/// Parses rows back into traces; consecutive rows with the same label form
/// one trace.
pub fn read_traces<R: Read>(reader: R) -> Result<Vec<RunTrace>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(HEADER) {
        return Err(CliError::Csv(format!(
            "unexpected header {:?}",
            r.headers()?
        )));
    }
    let mut traces: Vec<RunTrace> = Vec::new();
    for record in r.records() {
        let record = record?;
        let float = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|e| CliError::Csv(format!("column {}: {e}", HEADER[i])))
        };
        let row = TraceRow {
            iter: record[1]
                .parse()
                .map_err(|e| CliError::Csv(format!("column iter: {e}")))?,
            time_s: float(2)?,
            f: float(3)?,
            ortho_err: float(4)?,
            grad_norm: float(5)?,
            dist_opt: float(6)?,
            eta: float(7)?,
            status: record[8]
                .parse::<RunStatus>()
                .map_err(|e| CliError::Csv(e.to_string()))?,
        };
        match traces.last_mut() {
            Some(t) if t.method == record[0] => t.rows.push(row),
            _ => {
                let mut t = RunTrace::new(&record[0]);
                t.rows.push(row);
                traces.push(t);
            }
        }
    }
    Ok(traces)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<RunTrace>, CliError> {
    read_traces(File::open(path).map_err(io_error(path))?)
}

/// Keeps every `every`-th row plus the first and last.
pub fn thin(trace: &mut RunTrace, every: usize) {
    if every <= 1 || trace.rows.len() <= 2 {
        return;
    }
    let last = trace.rows.len() - 1;
    let mut i = 0;
    trace.rows.retain(|r| {
        let keep = i == 0 || i == last || r.iter % every == 0;
        i += 1;
        keep
    });
}
