use std::io::Write;

use serde::Serialize;

use super::ConvergenceMetrics;
use crate::linalg::SolveDiagnostics;
use crate::{Error, Result};

/// Record of one completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub metrics: ConvergenceMetrics,
    pub alpha_p: f64,
    pub alpha_d: f64,
    pub gamma: f64,
    pub kappa_raw: Option<f64>,
    pub kappa_precond: Option<f64>,
    pub min_slack: f64,
    pub min_multiplier: f64,
    pub step_control_shrinks: usize,
    /// Relative residual of the Newton system as solved.
    pub solve_residual: f64,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
}

pub const CSV_HEADER: [&str; 11] = [
    "iteration",
    "feascond",
    "gradcond",
    "compcond",
    "costcond",
    "objective",
    "alpha_p",
    "alpha_d",
    "gamma",
    "kappa_raw",
    "kappa_precond",
];

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with one row per iteration. When `initial` is given it is written
    /// as iteration 0, with the step columns left empty.
    pub fn write_csv<W: Write>(&self, writer: W, initial: Option<(&ConvergenceMetrics, f64)>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(CSV_HEADER).map_err(ser)?;
        if let Some((m, gamma)) = initial {
            w.write_record([
                "0".to_string(),
                num(m.feascond),
                num(m.gradcond),
                num(m.compcond),
                num(m.costcond),
                num(m.objective),
                String::new(),
                String::new(),
                num(gamma),
                String::new(),
                String::new(),
            ])
            .map_err(ser)?;
        }
        for e in &self.entries {
            let m = &e.metrics;
            w.write_record([
                e.iteration.to_string(),
                num(m.feascond),
                num(m.gradcond),
                num(m.compcond),
                num(m.costcond),
                num(m.objective),
                num(e.alpha_p),
                num(e.alpha_d),
                num(e.gamma),
                opt(e.kappa_raw),
                opt(e.kappa_precond),
            ])
            .map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }
}
