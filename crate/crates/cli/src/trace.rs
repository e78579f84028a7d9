//! CSV convergence traces, one row per iteration:
//!
//! ```text
//! iter,objective,decrease,grad_norm,step_norm,flops,elapsed_ns
//! ```
//!
//! `objective` is `F(W^t)`, `decrease` is `F(W^t) - F(W^{t+1})`, and the
//! norms are `||grad F(W^t)||_F` and `||W^{t+1} - W^t||_F`. `elapsed_ns` is
//! zero unless timing was requested.

use std::fs;
use std::path::Path;

use cmop_core::IterationRecord;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const TRACE_HEADER: &str = "iter,objective,decrease,grad_norm,step_norm,flops,elapsed_ns";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Row {
    iter: usize,
    objective: f64,
    decrease: f64,
    grad_norm: f64,
    step_norm: f64,
    flops: u64,
    elapsed_ns: u64,
}

impl From<&IterationRecord> for Row {
    fn from(r: &IterationRecord) -> Self {
        Row {
            iter: r.iter,
            objective: r.objective,
            decrease: r.decrease,
            grad_norm: r.grad_norm,
            step_norm: r.step_norm,
            flops: r.flops,
            elapsed_ns: r.elapsed_ns,
        }
    }
}

impl From<Row> for IterationRecord {
    fn from(r: Row) -> Self {
        IterationRecord {
            iter: r.iter,
            objective: r.objective,
            decrease: r.decrease,
            grad_norm: r.grad_norm,
            step_norm: r.step_norm,
            flops: r.flops,
            elapsed_ns: r.elapsed_ns,
        }
    }
}

pub fn trace_to_csv(trace: &[IterationRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if trace.is_empty() {
        // serde only emits the header alongside a first record.
        w.write_record(TRACE_HEADER.split(',')).expect("in-memory write");
    }
    for rec in trace {
        w.serialize(Row::from(rec)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is ascii")
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> CliResult<()> {
    fs::write(path, trace_to_csv(trace)).map_err(|e| CliError::io(path, e))
}

/// Reads a trace, insisting on the exact header and on `iter` counting up
/// from zero.
pub fn read_trace(path: &Path) -> CliResult<Vec<IterationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::format(path, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != TRACE_HEADER {
        return Err(CliError::format(path, format!("header: expected `{TRACE_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::format(path, format!("row {}: {e}", i + 1)))?;
        if row.iter != i {
            return Err(CliError::format(path, format!("iter: row {} has iter {}, expected {i}", i + 1, row.iter)));
        }
        out.push(row.into());
    }
    Ok(out)
}
