//! Variational linear solver: a layered ansatz trained to make `A|ψ⟩`
//! parallel to `|b⟩`, followed by classical rescaling of the state.

mod ansatz;
mod cost;
mod optimize;

use std::fmt;
use std::str::FromStr;

pub use ansatz::Ansatz;
pub use cost::{EffectiveHamiltonian, VqlsCost};
pub use optimize::{initial_params, restart_rng, run_optimizer, OptimizerTrace, OptimizerTraceRow, RestartResult};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{EmbeddedSystem, SolveDiagnostics, SolveReport};
use crate::quantum::pauli_decompose_real;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Lbfgs,
    GradientDescent,
    AdaptiveRandomSearch,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Lbfgs => "lbfgs",
            Optimizer::GradientDescent => "gradient_descent",
            Optimizer::AdaptiveRandomSearch => "adaptive_random_search",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(Optimizer::Lbfgs),
            "gradient_descent" | "gd" => Ok(Optimizer::GradientDescent),
            "adaptive_random_search" | "random" => Ok(Optimizer::AdaptiveRandomSearch),
            other => Err(Error::InvalidOption(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// One backward sweep through the circuit.
    Adjoint,
    /// Two shifted circuit evaluations per angle.
    ParameterShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqlsConfig {
    /// Starting ansatz depth.
    pub layers: usize,
    /// Depth is raised by two per escalation up to this value.
    pub max_layers: usize,
    pub max_iterations: usize,
    /// A restart stops once the cost reaches this value.
    pub cost_tolerance: f64,
    /// Solutions whose embedded relative residual exceeds this trigger
    /// escalation, and are flagged when escalation is exhausted.
    pub residual_tolerance: f64,
    pub optimizer: Optimizer,
    pub gradient: GradientMethod,
    /// Gradient-descent step, or initial search radius.
    pub step_size: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for VqlsConfig {
    fn default() -> Self {
        VqlsConfig {
            layers: 4,
            max_layers: 16,
            max_iterations: 2000,
            cost_tolerance: 1e-12,
            residual_tolerance: 1e-3,
            optimizer: Optimizer::Lbfgs,
            gradient: GradientMethod::Adjoint,
            step_size: 0.1,
            restarts: 5,
            seed: 0,
        }
    }
}

impl VqlsConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidOption(m.into()));
        if self.layers == 0 || self.max_layers < self.layers {
            return fail("layers must satisfy 1 ≤ layers ≤ max_layers");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        if !(self.cost_tolerance > 0.0) || !(self.residual_tolerance > 0.0) {
            return fail("tolerances must be positive");
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return fail("step size must be positive");
        }
        if self.restarts == 0 {
            return fail("at least one restart is required");
        }
        Ok(())
    }

    /// Depths tried in order.
    pub fn layer_schedule(&self) -> Vec<usize> {
        let mut out = vec![self.layers];
        let mut next = self.layers.max(4) + 2;
        while next <= self.max_layers {
            out.push(next);
            next += 2;
        }
        out
    }
}

/// Best result over the restarts at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct VqlsOutcome {
    pub ansatz: Ansatz,
    pub params: Vec<f64>,
    pub cost: f64,
    /// Index of the restart that produced `params`.
    pub restart: usize,
    pub restarts_run: usize,
    pub iterations: usize,
    pub trace: OptimizerTrace,
}

/// Train the ansatz from seeded random starts, stopping early once a
/// restart reaches the cost tolerance. Ties go to the lower restart index.
pub fn optimize(a: &DMatrix<f64>, b: &DVector<f64>, ansatz: Ansatz, config: &VqlsConfig) -> Result<VqlsOutcome> {
    config.validate()?;
    let cost = VqlsCost::new(ansatz, a, b)?;
    let mut best: Option<(usize, RestartResult)> = None;
    let mut trace = OptimizerTrace::default();
    let mut iterations = 0;
    let mut restarts_run = 0;
    for restart in 0..config.restarts {
        let mut rng = restart_rng(config.seed, ansatz.layers, restart);
        let start = initial_params(&mut rng, ansatz.num_params());
        let result = run_optimizer(&cost, config, start, &mut rng, restart)?;
        restarts_run += 1;
        iterations += result.iterations;
        trace.rows.extend(result.rows.iter().cloned());
        let done = result.cost <= config.cost_tolerance;
        if best.as_ref().is_none_or(|(_, b)| result.cost < b.cost) {
            best = Some((restart, result));
        }
        if done {
            break;
        }
    }
    let (restart, result) = best.expect("at least one restart");
    Ok(VqlsOutcome { ansatz, params: result.params, cost: result.cost, restart, restarts_run, iterations, trace })
}

/// Read the trained state and rescale it onto the embedded system, then
/// undo the embedding. The residual is recomputed on the embedded system.
pub fn extract_solution(
    outcome: &VqlsOutcome,
    system: &EmbeddedSystem,
    residual_tolerance: f64,
) -> Result<SolveReport> {
    let cost = VqlsCost::new(outcome.ansatz, &system.a, &system.b)?;
    let xq = cost.scaled_solution(&outcome.params)?;
    let residual = (&system.a * &xq - &system.b).norm() / system.b.norm();
    let degenerate = xq.amax() == 0.0;
    Ok(SolveReport {
        x: system.embedding.recover(&xq),
        relative_residual: residual,
        kappa_raw: None,
        kappa_precond: None,
        diagnostics: SolveDiagnostics {
            backend: "vqls".into(),
            quantum_solves: 1,
            optimizer_iterations: outcome.iterations,
            restarts: outcome.restarts_run,
            layers: Some(outcome.ansatz.layers),
            final_cost: Some(outcome.cost),
            qubits: Some(outcome.ansatz.qubits),
            flagged: degenerate || !(residual <= residual_tolerance),
            ..Default::default()
        },
    })
}

/// Full solve with depth escalation. Returns the report and the optimizer
/// trace of every depth tried.
pub fn vqls_solve(system: &EmbeddedSystem, config: &VqlsConfig) -> Result<(SolveReport, OptimizerTrace)> {
    config.validate()?;
    let qubits = system.embedding.qubits();
    let terms = pauli_decompose_real(&system.a)?.len();
    log::debug!("VQLS on {qubits} qubits, {terms} Pauli terms");

    let mut trace = OptimizerTrace::default();
    let mut best: Option<SolveReport> = None;
    let mut iterations = 0;
    for layers in config.layer_schedule() {
        let outcome = optimize(&system.a, &system.b, Ansatz::new(qubits, layers)?, config)?;
        iterations += outcome.iterations;
        trace.rows.extend(outcome.trace.rows.iter().cloned());
        let report = extract_solution(&outcome, system, config.residual_tolerance)?;
        let accepted = !report.diagnostics.flagged;
        if best.as_ref().is_none_or(|b| report.relative_residual < b.relative_residual) {
            best = Some(report);
        }
        if accepted {
            break;
        }
        log::debug!("VQLS residual above tolerance at {layers} layers");
    }
    let mut report = best.expect("layer schedule is never empty");
    report.diagnostics.optimizer_iterations = iterations;
    report.diagnostics.pauli_terms = Some(terms);
    Ok((report, trace))
}
