//! Linear-system backends for the Newton systems.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::hhl::{HhlConfig, HhlPlan};
use crate::linalg::{
    build_preconditioner, condition_number, direct_solve, padded_embedding, quantum_embedding, LinearSystem,
    Preconditioner, Preconditioning, SolveDiagnostics, SolveReport,
};
use crate::vqls::{vqls_solve, OptimizerTrace, VqlsConfig};
use crate::Result;

/// Solves one Newton system per interior point iteration.
pub trait LinearBackend {
    fn name(&self) -> &str;
    fn solve(&mut self, system: &LinearSystem) -> Result<SolveReport>;
}

/// LU with partial pivoting on the full system, optionally after the same
/// left preconditioning the quantum backends use.
#[derive(Debug, Clone)]
pub struct ClassicalBackend {
    pub precondition: Preconditioning,
    /// Compute condition numbers for the trace.
    pub record_condition: bool,
}

impl Default for ClassicalBackend {
    fn default() -> Self {
        ClassicalBackend { precondition: Preconditioning::None, record_condition: true }
    }
}

impl LinearBackend for ClassicalBackend {
    fn name(&self) -> &str {
        "classical"
    }

    fn solve(&mut self, system: &LinearSystem) -> Result<SolveReport> {
        let kappa_raw = self.record_condition.then(|| condition_number(&system.a));
        let Some((m, pre, kappa)) =
            build_preconditioner(system, self.precondition, kappa_raw.unwrap_or(f64::INFINITY))?
        else {
            let mut report = direct_solve(system)?;
            report.kappa_raw = kappa_raw;
            report.diagnostics.backend = self.name().into();
            return Ok(report);
        };
        let mut report = direct_solve(&pre)?;
        report.relative_residual = system.relative_residual(&report.x);
        report.kappa_raw = kappa_raw;
        report.kappa_precond = Some(kappa);
        report.diagnostics.backend = self.name().into();
        report.diagnostics.fill_level = Some(m.factors.fill_level);
        if m.factors.shift != 0.0 {
            report.diagnostics.diagonal_shifts.push(m.factors.shift);
        }
        Ok(report)
    }
}

/// Classical iterative refinement around an approximate quantum solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Stop once `‖Ax − b‖/‖b‖` on the original system reaches this.
    pub tolerance: f64,
    /// Quantum solves per Newton system.
    pub max_rounds: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Refinement { tolerance: 1e-10, max_rounds: 25 }
    }
}

/// Preconditions once, then repeatedly solves `M⁻¹A d = M⁻¹(b − Ax)` with
/// `quantum` and accumulates `x += d`.
fn refine(
    system: &LinearSystem,
    precondition: Preconditioning,
    refinement: Refinement,
    backend: &str,
    mut quantum: impl FnMut(&LinearSystem, usize) -> Result<SolveReport>,
) -> Result<SolveReport> {
    let kappa_raw = condition_number(&system.a);
    let built = build_preconditioner(system, precondition, kappa_raw)?;
    let mut diagnostics = SolveDiagnostics { backend: backend.into(), ..Default::default() };
    let (working, kappa_precond, apply): (LinearSystem, Option<f64>, Option<Preconditioner>) = match built {
        Some((m, pre, kappa)) => {
            diagnostics.fill_level = Some(m.factors.fill_level);
            if m.factors.shift != 0.0 {
                diagnostics.diagonal_shifts.push(m.factors.shift);
            }
            (pre, Some(kappa), Some(m))
        }
        None => (system.clone(), None, None),
    };

    let mut x = DVector::zeros(system.dim());
    let mut residual = system.relative_residual(&x);
    for round in 0..refinement.max_rounds {
        if residual <= refinement.tolerance {
            break;
        }
        let raw = &system.b - &system.a * &x;
        let rhs = match &apply {
            Some(m) => m.apply(&raw)?,
            None => raw,
        };
        let step = quantum(&LinearSystem { a: working.a.clone(), b: rhs, blocks: working.blocks }, round)?;
        merge(&mut diagnostics, &step.diagnostics);
        x += &step.x;
        residual = system.relative_residual(&x);
    }
    diagnostics.refinement_rounds = diagnostics.quantum_solves.saturating_sub(1);
    diagnostics.flagged = !(residual <= refinement.tolerance);
    if diagnostics.flagged {
        log::warn!("{backend}: refinement stopped at residual {residual:.3e}");
    }
    Ok(SolveReport { x, relative_residual: residual, kappa_raw: Some(kappa_raw), kappa_precond, diagnostics })
}

fn merge(total: &mut SolveDiagnostics, step: &SolveDiagnostics) {
    total.quantum_solves += step.quantum_solves;
    total.optimizer_iterations += step.optimizer_iterations;
    total.restarts += step.restarts;
    total.layers = total.layers.max(step.layers);
    total.final_cost = match (total.final_cost, step.final_cost) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    total.pauli_terms = total.pauli_terms.or(step.pauli_terms);
    total.post_selection_probability = match (total.post_selection_probability, step.post_selection_probability) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    total.clock_qubits = step.clock_qubits.or(total.clock_qubits);
    total.qubits = step.qubits.or(total.qubits);
}

/// Seed of one quantum solve, derived from the run seed, the Newton system
/// index and the refinement round.
pub fn derive_seed(base: u64, solve: usize, round: usize) -> u64 {
    let tag = ((solve as u64) << 20) | round as u64;
    base ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Left-preconditioned HHL with classical refinement.
#[derive(Debug, Clone, Default)]
pub struct HhlBackend {
    pub precondition: Preconditioning,
    pub config: HhlConfig,
    pub refinement: Refinement,
}

impl LinearBackend for HhlBackend {
    fn name(&self) -> &str {
        "hhl"
    }

    fn solve(&mut self, system: &LinearSystem) -> Result<SolveReport> {
        let config = self.config;
        let mut plan: Option<HhlPlan> = None;
        refine(system, self.precondition, self.refinement, "hhl", |sys, _| {
            let embedded = quantum_embedding(sys);
            if plan.is_none() {
                plan = Some(HhlPlan::new(&embedded.a, &config)?);
            }
            let plan = plan.as_ref().expect("plan built above");
            let out = plan.run(&embedded.b)?;
            Ok(SolveReport {
                x: embedded.embedding.recover(&out.x),
                relative_residual: f64::NAN,
                kappa_raw: None,
                kappa_precond: None,
                diagnostics: SolveDiagnostics {
                    quantum_solves: 1,
                    post_selection_probability: Some(out.post_selection_probability),
                    clock_qubits: Some(plan.clock_qubits()),
                    qubits: Some(plan.qubits()),
                    ..Default::default()
                },
            })
        })
    }
}

/// Left-preconditioned VQLS with classical refinement. Remembers the depth
/// that last succeeded so later Newton systems start there.
#[derive(Debug, Clone)]
pub struct VqlsBackend {
    pub precondition: Preconditioning,
    pub config: VqlsConfig,
    pub refinement: Refinement,
    solves: usize,
    layers: usize,
    /// Optimizer trace of every quantum solve, tagged by Newton system and
    /// refinement round.
    pub traces: Vec<(usize, usize, OptimizerTrace)>,
}

impl VqlsBackend {
    pub fn new(precondition: Preconditioning, config: VqlsConfig, refinement: Refinement) -> Self {
        VqlsBackend { precondition, config, refinement, solves: 0, layers: config.layers, traces: Vec::new() }
    }
}

impl Default for VqlsBackend {
    fn default() -> Self {
        VqlsBackend::new(Preconditioning::default(), VqlsConfig::default(), Refinement::default())
    }
}

impl LinearBackend for VqlsBackend {
    fn name(&self) -> &str {
        "vqls"
    }

    fn solve(&mut self, system: &LinearSystem) -> Result<SolveReport> {
        let solve = self.solves;
        self.solves += 1;
        let base = self.config;
        let mut layers = self.layers;
        let mut traces = Vec::new();
        let report = refine(system, self.precondition, self.refinement, "vqls", |sys, round| {
            let config = VqlsConfig { layers, seed: derive_seed(base.seed, solve, round), ..base };
            let embedded = padded_embedding(sys);
            let (report, trace) = vqls_solve(&embedded, &config)?;
            layers = report.diagnostics.layers.unwrap_or(layers);
            traces.push((solve, round, trace));
            Ok(report)
        })?;
        self.layers = layers;
        self.traces.extend(traces);
        Ok(report)
    }
}
