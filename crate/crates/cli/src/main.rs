//! `qopf`: run optimal power flow experiments from the command line.
//!
//! Every flag can also be set through an environment variable named
//! `QOPF_<FLAG>` (for example `QOPF_BACKEND=hhl`); explicit flags win.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qopf_core::experiment::{self, error_json, BackendKind, RunSpec};
use qopf_core::ipm::SolveStatus;
use qopf_core::linalg::Preconditioning;
use qopf_core::opf::Formulation;
use qopf_core::Error;

#[derive(Parser)]
#[command(name = "qopf", version, about = "Interior point OPF with classical, HHL and VQLS linear solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write the trace, summary and gradcond data.
    Run {
        #[arg(long, env = "QOPF_CASE")]
        case: String,
        #[arg(long, env = "QOPF_BACKEND", default_value = "classical")]
        backend: BackendKind,
        /// Directory for the artifacts.
        #[arg(long, env = "QOPF_OUT")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run several cases and backends and print a cost/iteration table.
    Compare {
        /// Repeat or separate with commas.
        #[arg(long, env = "QOPF_CASE", value_delimiter = ',', required = true)]
        case: Vec<String>,
        #[arg(long, env = "QOPF_BACKEND", value_delimiter = ',', default_value = "classical,vqls,hhl")]
        backend: Vec<BackendKind>,
        /// Directory for the table CSV and per-run artifacts.
        #[arg(long, env = "QOPF_OUT")]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "QOPF_JOBS", default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, env = "QOPF_FORMULATION", default_value = "dc")]
    formulation: Formulation,
    /// `none`, `ilu0` or `ilu` (adaptive fill); defaults per backend.
    #[arg(long, env = "QOPF_PRECONDITION")]
    precondition: Option<Preconditioning>,
    #[arg(long, env = "QOPF_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "QOPF_MAX_ITER")]
    max_iter: Option<usize>,
    /// Termination tolerance applied to all four conditions.
    #[arg(long, env = "QOPF_TOL")]
    tol: Option<f64>,
    /// Starting ansatz depth.
    #[arg(long, env = "QOPF_VQLS_LAYERS")]
    vqls_layers: Option<usize>,
    #[arg(long, env = "QOPF_HHL_CLOCK")]
    hhl_clock: Option<usize>,
}

impl Common {
    fn spec(&self, case: &str, backend: BackendKind, out: Option<PathBuf>) -> RunSpec {
        let mut spec = RunSpec::new(case, self.formulation, backend);
        spec.precondition = self.precondition;
        spec.seed = self.seed;
        spec.output_dir = out;
        if let Some(n) = self.max_iter {
            spec.options.max_iterations = n;
        }
        if let Some(tol) = self.tol {
            spec.options = spec.options.with_tolerance(tol);
        }
        if let Some(layers) = self.vqls_layers {
            spec.vqls.layers = layers;
            spec.vqls.max_layers = spec.vqls.max_layers.max(layers);
        }
        if let Some(clock) = self.hhl_clock {
            spec.hhl.clock_qubits = clock;
        }
        spec
    }
}

/// Input problems exit with 2, solver failures with 3, unconverged runs with 1.
fn fail(error: &Error) -> ExitCode {
    println!("{}", serde_json::to_string_pretty(&error_json(error)).expect("error JSON serializes"));
    match error {
        Error::CaseNotFound { .. }
        | Error::Io { .. }
        | Error::Syntax { .. }
        | Error::Schema { .. }
        | Error::Validation(_)
        | Error::InvalidOption(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { case, backend, out, common } => {
            let spec = common.spec(&case, backend, out);
            match experiment::run(&spec) {
                Ok(outcome) => {
                    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
                    eprintln!("wall time {:.3} s", outcome.wall_time.as_secs_f64());
                    if outcome.summary.status == SolveStatus::Converged {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Compare { case, backend, out, jobs, common } => {
            let specs: Vec<RunSpec> = case
                .iter()
                .flat_map(|c| backend.iter().map(move |b| (c, *b)))
                .map(|(c, b)| {
                    let mut spec = common.spec(c, b, None);
                    spec.output_dir = out.as_ref().map(|dir| dir.join(spec.label()));
                    spec
                })
                .collect();
            let table = match experiment::compare(&specs, jobs) {
                Ok(t) => t,
                Err(e) => return fail(&e),
            };
            print!("{}", table.to_text());
            if let Some(dir) = out {
                let path = dir.join("comparison.csv");
                let written = fs::create_dir_all(&dir)
                    .and_then(|_| fs::File::create(&path))
                    .map_err(|source| Error::Io { path: path.clone(), source })
                    .and_then(|f| table.write_csv(f));
                if let Err(e) = written {
                    return fail(&e);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
