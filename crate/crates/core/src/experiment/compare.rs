use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::{run, BackendKind, RunSpec};
use crate::ipm::SolveStatus;
use crate::opf::Formulation;
use crate::{Error, Result};

/// Marker for a run that failed or did not converge.
pub const MISSING: &str = "−";

/// Outcome of one (case, backend) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCell {
    pub iterations: Option<usize>,
    pub cost: Option<f64>,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

impl ComparisonCell {
    fn is_missing(&self) -> bool {
        self.status != Some(SolveStatus::Converged)
    }
}

/// One row per case and formulation, one column pair per backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub backends: Vec<BackendKind>,
    pub rows: Vec<(String, Formulation, BTreeMap<BackendKind, ComparisonCell>)>,
}

impl ComparisonTable {
    pub fn cell(&self, case: &str, formulation: Formulation, backend: BackendKind) -> Option<&ComparisonCell> {
        self.rows.iter().find(|(c, f, _)| c == case && *f == formulation).and_then(|(_, _, cells)| cells.get(&backend))
    }

    fn text_cells(&self, cells: &BTreeMap<BackendKind, ComparisonCell>) -> Vec<(String, String)> {
        self.backends
            .iter()
            .map(|b| match cells.get(b) {
                Some(c) if !c.is_missing() => (
                    c.cost.map_or(MISSING.into(), |v| format!("{v:.2}")),
                    c.iterations.map_or(MISSING.into(), |n| n.to_string()),
                ),
                _ => (MISSING.into(), MISSING.into()),
            })
            .collect()
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut header = vec!["Case".to_string()];
        for b in &self.backends {
            header.push(format!("{} cost", b.label()));
            header.push(format!("{} iter", b.label()));
        }
        let mut lines = vec![header];
        for (case, formulation, cells) in &self.rows {
            let mut line = vec![format!("{case} ({})", formulation.to_string().to_uppercase())];
            for (cost, iters) in self.text_cells(cells) {
                line.push(cost);
                line.push(iters);
            }
            lines.push(line);
        }
        let widths: Vec<usize> =
            (0..lines[0].len()).map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (k, line) in lines.iter().enumerate() {
            let cols: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cols.join("  ").trim_end());
            if k == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            }
        }
        out
    }

    /// CSV with `case, formulation` then `<backend>_cost, <backend>_iterations`
    /// per backend; missing cells hold the marker.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        let mut header = vec!["case".to_string(), "formulation".to_string()];
        for b in &self.backends {
            header.push(format!("{b}_cost"));
            header.push(format!("{b}_iterations"));
        }
        w.write_record(&header).map_err(ser)?;
        for (case, formulation, cells) in &self.rows {
            let mut record = vec![case.clone(), formulation.to_string()];
            for (cost, iters) in self.text_cells(cells) {
                record.push(cost);
                record.push(iters);
            }
            w.write_record(&record).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Run every spec on up to `jobs` worker threads and tabulate the results.
/// Failures become missing cells rather than errors.
pub fn compare(specs: &[RunSpec], jobs: usize) -> Result<ComparisonTable> {
    if specs.len() < 2 {
        return Err(Error::InvalidOption(format!("compare needs at least two runs, got {}", specs.len())));
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<ComparisonCell>>> = Mutex::new(vec![None; specs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, specs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(k) else { break };
                let cell = match run(spec) {
                    Ok(o) => ComparisonCell {
                        iterations: Some(o.summary.iterations),
                        cost: Some(o.summary.objective),
                        status: Some(o.summary.status),
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("{}: {e}", spec.label());
                        ComparisonCell { iterations: None, cost: None, status: None, error: Some(e.to_string()) }
                    }
                };
                results.lock().expect("no worker panics while holding the lock")[k] = Some(cell);
            });
        }
    });
    let results = results.into_inner().expect("workers joined");

    let mut backends: Vec<BackendKind> = specs.iter().map(|s| s.backend).collect();
    backends.sort();
    backends.dedup();
    let mut table = ComparisonTable { backends, rows: Vec::new() };
    for (spec, cell) in specs.iter().zip(results) {
        let cell = cell.expect("every spec was run");
        let row = match table.rows.iter().position(|(c, f, _)| *c == spec.case && *f == spec.formulation) {
            Some(i) => i,
            None => {
                table.rows.push((spec.case.clone(), spec.formulation, BTreeMap::new()));
                table.rows.len() - 1
            }
        };
        table.rows[row].2.insert(spec.backend, cell);
    }
    Ok(table)
}
