use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use super::StepTrace;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 13] = [
    "iter",
    "phase",
    "mu",
    "delta",
    "rho_l2",
    "rho_l3",
    "rho_l4",
    "rho_linf",
    "phi",
    "step_kind",
    "correctors",
    "residual",
    "violation_max",
];

/// One parsed trace CSV row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub phase: usize,
    pub mu: f64,
    pub delta: f64,
    pub rho_l2: f64,
    pub rho_l3: f64,
    pub rho_l4: f64,
    pub rho_linf: f64,
    pub phi: f64,
    pub step_kind: String,
    pub correctors: usize,
    pub residual: f64,
    pub violation_max: f64,
}

fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace<W: Write>(traces: &[StepTrace], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(TRACE_HEADER).map_err(csv_err)?;
    for t in traces {
        wtr.write_record([
            t.iter.to_string(),
            t.phase_index.to_string(),
            f17(t.mu),
            f17(t.delta),
            f17(t.rho_l2),
            f17(t.rho_l3),
            f17(t.rho_l4),
            f17(t.rho_linf),
            f17(t.phi),
            t.step_kind.as_str().to_string(),
            t.corrector_count.to_string(),
            f17(t.residual_after),
            f17(t.violation_max()),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the trace CSV to `path`.
pub fn emit_trace(traces: &[StepTrace], path: impl AsRef<Path>) -> Result<()> {
    write_trace(traces, File::create(path)?)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header != TRACE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected trace header {header:?}"),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}
