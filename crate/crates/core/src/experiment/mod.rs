//! Batch runs: solve a case with one backend, write artifacts, and build
//! comparison tables across backends.

mod compare;

pub use compare::{compare, ComparisonCell, ComparisonTable};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backend::{ClassicalBackend, HhlBackend, LinearBackend, Refinement, VqlsBackend};
use crate::hhl::HhlConfig;
use crate::ipm::{solve, ConvergenceMetrics, IpmResult, SolveStatus, SolverOptions};
use crate::linalg::Preconditioning;
use crate::network::{bundled_case, bundled_case_names, load_case, PowerCase};
use crate::opf::{build_problem, Formulation};
use crate::vqls::{OptimizerTrace, VqlsConfig};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GRADCOND_FILE: &str = "gradcond.dat";
pub const TIMING_FILE: &str = "timing.json";
pub const OPTIMIZER_FILE: &str = "vqls_optimizer.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ClassicalLu,
    VqlsPreconditioned,
    HhlPreconditioned,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] =
        [BackendKind::ClassicalLu, BackendKind::VqlsPreconditioned, BackendKind::HhlPreconditioned];

    pub fn label(&self) -> &'static str {
        match self {
            BackendKind::ClassicalLu => "Classical",
            BackendKind::VqlsPreconditioned => "VQLS_p",
            BackendKind::HhlPreconditioned => "HHL_p",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::ClassicalLu => "classical_lu",
            BackendKind::VqlsPreconditioned => "vqls_preconditioned",
            BackendKind::HhlPreconditioned => "hhl_preconditioned",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "classical_lu" | "lu" => Ok(BackendKind::ClassicalLu),
            "vqls" | "vqls_preconditioned" | "vqls_p" => Ok(BackendKind::VqlsPreconditioned),
            "hhl" | "hhl_preconditioned" | "hhl_p" => Ok(BackendKind::HhlPreconditioned),
            other => Err(Error::InvalidOption(format!("unknown backend `{other}`"))),
        }
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    /// Bundled case name or path to a `.json`/`.m` case file.
    pub case: String,
    pub formulation: Formulation,
    pub backend: BackendKind,
    /// Left preconditioning; `None` picks the backend default (none for
    /// the classical backend, adaptive ILU for the quantum ones).
    pub precondition: Option<Preconditioning>,
    pub options: SolverOptions,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub vqls: VqlsConfig,
    pub hhl: HhlConfig,
    pub refinement: Refinement,
}

impl RunSpec {
    /// Defaults for `case` with the formulation's tolerances.
    pub fn new(case: impl Into<String>, formulation: Formulation, backend: BackendKind) -> Self {
        RunSpec {
            case: case.into(),
            formulation,
            backend,
            precondition: None,
            options: SolverOptions::for_formulation(formulation),
            output_dir: None,
            seed: 0,
            vqls: VqlsConfig::default(),
            hhl: HhlConfig::default(),
            refinement: Refinement::default(),
        }
    }

    /// Preconditioning actually applied by the chosen backend.
    pub fn effective_precondition(&self) -> Preconditioning {
        self.precondition.unwrap_or(match self.backend {
            BackendKind::ClassicalLu => Preconditioning::None,
            _ => Preconditioning::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        self.vqls.validate()?;
        self.hhl.validate()?;
        if !(self.refinement.tolerance > 0.0) || self.refinement.max_rounds == 0 {
            return Err(Error::InvalidOption("refinement needs a positive tolerance and at least one round".into()));
        }
        Ok(())
    }

    /// Short name used for output subdirectories.
    pub fn label(&self) -> String {
        let stem = Path::new(&self.case).file_stem().map_or(self.case.clone(), |s| s.to_string_lossy().into_owned());
        format!("{stem}_{}_{}", self.formulation, self.backend)
    }
}

/// Resolve a case argument: an existing file wins, then bundled names.
pub fn resolve_case(case: &str) -> Result<PowerCase> {
    let path = Path::new(case);
    if path.is_file() {
        return load_case(path);
    }
    if bundled_case_names().contains(&case) {
        return bundled_case(case);
    }
    Err(Error::CaseNotFound { path: path.to_path_buf() })
}

/// Machine-readable result of one run; identical for identical specs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub case: String,
    pub formulation: Formulation,
    pub backend: BackendKind,
    pub precondition: String,
    pub seed: u64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Final generation cost in $/h.
    pub objective: f64,
    pub initial_metrics: ConvergenceMetrics,
    pub final_metrics: ConvergenceMetrics,
    pub kappa_raw: Vec<Option<f64>>,
    pub kappa_precond: Vec<Option<f64>>,
    pub quantum_solves: usize,
    pub flagged_solves: usize,
    /// Indices of inequalities with `μ > z` at the solution.
    pub active_set: Vec<usize>,
    pub artifacts: Vec<String>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub summary: RunSummary,
    pub result: IpmResult,
    pub optimizer_traces: Vec<(usize, usize, OptimizerTrace)>,
    pub wall_time: Duration,
}

#[derive(Serialize)]
struct Timing {
    schema_version: u32,
    wall_time_seconds: f64,
}

/// Solve the spec's case and, when an output directory is set, write the
/// trace CSV, summary JSON, gnuplot data, timing and optimizer traces.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let case = resolve_case(&spec.case)?;
    let problem = build_problem(&case, spec.formulation)?;
    let precondition = spec.effective_precondition();
    let started = Instant::now();

    let (result, optimizer_traces) = match spec.backend {
        BackendKind::ClassicalLu => {
            let mut backend = ClassicalBackend { precondition, ..Default::default() };
            (solve(&problem, &spec.options, &mut backend)?, Vec::new())
        }
        BackendKind::HhlPreconditioned => {
            let mut backend = HhlBackend {
                precondition,
                config: HhlConfig { seed: spec.seed, ..spec.hhl },
                refinement: spec.refinement,
            };
            (solve(&problem, &spec.options, &mut backend)?, Vec::new())
        }
        BackendKind::VqlsPreconditioned => {
            let config = VqlsConfig { seed: spec.seed, ..spec.vqls };
            let mut backend = VqlsBackend::new(precondition, config, spec.refinement);
            let result = solve(&problem, &spec.options, &mut backend as &mut dyn LinearBackend)?;
            (result, backend.traces)
        }
    };
    let wall_time = started.elapsed();

    let entries = &result.trace.entries;
    let mut artifacts =
        vec![TRACE_FILE.to_string(), SUMMARY_FILE.to_string(), GRADCOND_FILE.to_string(), TIMING_FILE.to_string()];
    if !optimizer_traces.is_empty() {
        artifacts.push(OPTIMIZER_FILE.to_string());
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        case: case.name.clone(),
        formulation: spec.formulation,
        backend: spec.backend,
        precondition: precondition.to_string(),
        seed: spec.seed,
        status: result.status,
        iterations: result.iterations(),
        objective: result.objective(),
        initial_metrics: result.initial,
        final_metrics: result.final_metrics(),
        kappa_raw: entries.iter().map(|e| e.kappa_raw).collect(),
        kappa_precond: entries.iter().map(|e| e.kappa_precond).collect(),
        quantum_solves: entries.iter().map(|e| e.diagnostics.quantum_solves).sum(),
        flagged_solves: entries.iter().filter(|e| e.diagnostics.flagged).count(),
        active_set: result.state.active_set(),
        artifacts,
    };
    let outcome = RunOutcome { spec: spec.clone(), summary, result, optimizer_traces, wall_time };
    if let Some(dir) = &spec.output_dir {
        write_artifacts(dir, &outcome)?;
    }
    Ok(outcome)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(io_err(path))
}

pub fn write_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let result = &outcome.result;
    let initial_gamma = 1.0;

    let path = dir.join(TRACE_FILE);
    result.trace.write_csv(create(&path)?, Some((&result.initial, initial_gamma)))?;

    let path = dir.join(GRADCOND_FILE);
    let mut dat = String::from("# iteration gradcond\n");
    dat.push_str(&format!("0 {:.12e}\n", result.initial.gradcond));
    for e in &result.trace.entries {
        dat.push_str(&format!("{} {:.12e}\n", e.iteration, e.metrics.gradcond));
    }
    fs::write(&path, dat).map_err(io_err(&path))?;

    let path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&outcome.summary).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    let path = dir.join(TIMING_FILE);
    let timing = Timing { schema_version: SCHEMA_VERSION, wall_time_seconds: outcome.wall_time.as_secs_f64() };
    let json = serde_json::to_string_pretty(&timing).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    if !outcome.optimizer_traces.is_empty() {
        let path = dir.join(OPTIMIZER_FILE);
        write_optimizer_traces(create(&path)?, &outcome.optimizer_traces)?;
    }
    Ok(())
}

fn write_optimizer_traces<W: std::io::Write>(writer: W, traces: &[(usize, usize, OptimizerTrace)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["solve", "round", "restart", "layers", "iteration", "cost", "best_cost", "grad_norm"])
        .map_err(ser)?;
    for (solve, round, trace) in traces {
        for r in &trace.rows {
            w.write_record([
                solve.to_string(),
                round.to_string(),
                r.restart.to_string(),
                r.layers.to_string(),
                r.iteration.to_string(),
                format!("{:.12e}", r.cost),
                format!("{:.12e}", r.best_cost),
                r.grad_norm.map(|g| format!("{g:.12e}")).unwrap_or_default(),
            ])
            .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// JSON document describing a failure, for machine consumers.
pub fn error_json(error: &Error) -> serde_json::Value {
    let mut value = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": error.kind(),
        "message": error.to_string(),
    });
    if let Error::CaseNotFound { path } | Error::Io { path, .. } = error {
        value["path"] = serde_json::Value::String(path.display().to_string());
    }
    value
}
