use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::io::fmt_f64;

/// Header of the trace CSV.
pub const TRACE_HEADER: &str = "iter,primal_cost,dual_value,row_violation_l1,col_violation_l1,elapsed_ns";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub primal_cost: f64,
    pub dual_value: f64,
    pub row_violation_l1: f64,
    pub col_violation_l1: f64,
    pub elapsed_ns: u64,
}

/// Per-iteration solver record. `iter` strictly increases, `elapsed_ns`
/// never decreases.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    rows: Vec<TraceRow>,
    started: Instant,
}

impl Default for ConvergenceTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for ConvergenceTrace {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self { rows: Vec::new(), started: Instant::now() }
    }

    pub fn record(&mut self, iter: usize, primal_cost: f64, dual_value: f64, row_violation_l1: f64, col_violation_l1: f64) {
        let elapsed_ns = self.started.elapsed().as_nanos() as u64;
        if let Some(last) = self.rows.last() {
            debug_assert!(iter > last.iter, "trace iterations must increase");
        }
        let elapsed_ns = self.rows.last().map_or(elapsed_ns, |last| elapsed_ns.max(last.elapsed_ns));
        self.rows.push(TraceRow { iter, primal_cost, dual_value, row_violation_l1, col_violation_l1, elapsed_ns });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Same rows with the wall-clock column zeroed, for determinism checks.
    pub fn without_timing(&self) -> Vec<TraceRow> {
        self.rows.iter().map(|r| TraceRow { elapsed_ns: 0, ..*r }).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter,
                fmt_f64(r.primal_cost),
                fmt_f64(r.dual_value),
                fmt_f64(r.row_violation_l1),
                fmt_f64(r.col_violation_l1),
                r.elapsed_ns
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = ConvergenceTrace::new();
        t.record(0, 1.0, 0.5, 0.1, 0.0);
        t.record(1, 0.9, 0.6, 0.01, 0.0);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,1.0000000000000000e0,"));
        assert!(t.rows()[1].elapsed_ns >= t.rows()[0].elapsed_ns);
    }
}
