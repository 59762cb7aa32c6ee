//! Step-controlled primal-dual interior point method.

mod kkt;
mod step;
mod trace;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use kkt::assemble_kkt;
pub use step::{compute_convergence_metrics, compute_step_lengths, step_control, update_barrier};
pub use trace::{ConvergenceTrace, TraceEntry};

use crate::backend::LinearBackend;
use crate::linalg::SolveReport;
use crate::opf::{Formulation, NlpProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Centering parameter σ in (0, 1).
    pub sigma: f64,
    /// Fraction-to-boundary factor ξ in (0, 1).
    pub xi: f64,
    /// Step-control shrink factor in (0, 1).
    pub kappa_sc: f64,
    /// Step-control acceptance band half-width.
    pub eta: f64,
    pub feas_tol: f64,
    pub grad_tol: f64,
    pub comp_tol: f64,
    pub cost_tol: f64,
    pub max_iterations: usize,
    /// Step control gives up once `‖ΔX‖` falls below this fraction of its
    /// unshrunk length.
    pub step_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            sigma: 0.1,
            xi: 0.99995,
            kappa_sc: 0.6,
            eta: 0.25,
            feas_tol: 1e-6,
            grad_tol: 1e-6,
            comp_tol: 1e-6,
            cost_tol: 1e-6,
            max_iterations: 150,
            step_floor: 1e-12,
        }
    }
}

impl SolverOptions {
    pub fn for_formulation(formulation: Formulation) -> Self {
        match formulation {
            Formulation::Dc => Self::default(),
            Formulation::Ac => Self::default().with_tolerance(5e-6),
        }
    }

    /// Set all four termination tolerances.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self.grad_tol = tol;
        self.comp_tol = tol;
        self.cost_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        let checks = [
            (open(self.sigma), "sigma must lie in (0, 1)"),
            (open(self.xi) || self.xi == 1.0, "xi must lie in (0, 1]"),
            (open(self.kappa_sc), "kappa_sc must lie in (0, 1)"),
            (open(self.eta), "eta must lie in (0, 1)"),
            (
                [self.feas_tol, self.grad_tol, self.comp_tol, self.cost_tol].iter().all(|&t| t > 0.0),
                "tolerances must be positive",
            ),
            (self.max_iterations >= 1, "max_iterations must be at least 1"),
            (open(self.step_floor), "step_floor must lie in (0, 1)"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidOption((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Primal-dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: DVector<f64>,
    /// Inequality slacks, strictly positive.
    pub z: DVector<f64>,
    pub lambda: DVector<f64>,
    /// Inequality multipliers, strictly positive.
    pub mu: DVector<f64>,
    pub gamma: f64,
    pub iteration: usize,
}

impl IterateState {
    /// Standard start: `Z = max(−G(X0), 1)`, `μ = γ/Z` with `γ = 1`, `λ = 0`.
    pub fn initial(x0: DVector<f64>, g0: &DVector<f64>, ne: usize) -> Self {
        let gamma = 1.0;
        let z = g0.map(|g| (-g).max(1.0));
        let mu = z.map(|z| gamma / z);
        IterateState { x: x0, z, lambda: DVector::zeros(ne), mu, gamma, iteration: 0 }
    }

    /// Indices of inequalities whose multiplier dominates the slack.
    pub fn active_set(&self) -> Vec<usize> {
        (0..self.z.len()).filter(|&m| self.mu[m] > self.z[m]).collect()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.z.iter().chain(self.mu.iter()).all(|&v| v > 0.0)
    }
}

/// Problem functions evaluated at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub f: f64,
    pub df: DVector<f64>,
    pub h: DVector<f64>,
    pub dh: DMatrix<f64>,
    pub g: DVector<f64>,
    pub dg: DMatrix<f64>,
}

impl Evaluation {
    pub fn at<P: NlpProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> Self {
        Evaluation {
            f: problem.objective(x),
            df: problem.objective_gradient(x),
            h: problem.equalities(x),
            dh: problem.equality_jacobian(x),
            g: problem.inequalities(x),
            dg: problem.inequality_jacobian(x),
        }
    }

    /// `∇f + ∇Hᵀλ + ∇Gᵀμ`.
    pub fn lagrangian_gradient(&self, state: &IterateState) -> DVector<f64> {
        &self.df + self.dh.tr_mul(&state.lambda) + self.dg.tr_mul(&state.mu)
    }

    fn is_finite(&self) -> bool {
        self.f.is_finite() && self.h.iter().chain(self.g.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMetrics {
    pub feascond: f64,
    pub gradcond: f64,
    pub compcond: f64,
    pub costcond: f64,
    pub objective: f64,
}

impl ConvergenceMetrics {
    pub fn converged(&self, options: &SolverOptions) -> bool {
        self.feascond <= options.feas_tol
            && self.gradcond <= options.grad_tol
            && self.compcond <= options.comp_tol
            && self.costcond <= options.cost_tol
    }

    pub fn is_finite(&self) -> bool {
        [self.feascond, self.gradcond, self.compcond, self.costcond, self.objective].iter().all(|v| v.is_finite())
    }
}

/// Newton direction split into its four blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonDirection {
    pub dx: DVector<f64>,
    pub dz: DVector<f64>,
    pub dlambda: DVector<f64>,
    pub dmu: DVector<f64>,
}

impl NewtonDirection {
    pub fn from_solution(sol: &DVector<f64>, nx: usize, ni: usize, ne: usize) -> Self {
        NewtonDirection {
            dx: sol.rows(0, nx).into_owned(),
            dz: sol.rows(nx, ni).into_owned(),
            dlambda: sol.rows(nx + ni, ne).into_owned(),
            dmu: sol.rows(nx + ni + ne, ni).into_owned(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.dx *= factor;
        self.dz *= factor;
        self.dlambda *= factor;
        self.dmu *= factor;
    }
}

/// An accepted Newton step.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub direction: NewtonDirection,
    pub alpha_p: f64,
    pub alpha_d: f64,
    pub solve_report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stalled,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub state: IterateState,
    pub status: SolveStatus,
    pub initial: ConvergenceMetrics,
    pub trace: ConvergenceTrace,
}

impl IpmResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn objective(&self) -> f64 {
        self.trace.entries.last().map_or(self.initial.objective, |e| e.metrics.objective)
    }

    pub fn final_metrics(&self) -> ConvergenceMetrics {
        self.trace.entries.last().map_or(self.initial, |e| e.metrics)
    }
}

/// Run the interior point method, solving every Newton system with `backend`.
pub fn solve<P: NlpProblem + ?Sized>(
    problem: &P,
    options: &SolverOptions,
    backend: &mut dyn LinearBackend,
) -> Result<IpmResult> {
    options.validate()?;
    let (nx, ne, ni) = (problem.num_variables(), problem.num_equalities(), problem.num_inequalities());

    let x0 = problem.initial_point();
    let mut eval = Evaluation::at(problem, &x0);
    if !eval.is_finite() {
        return Err(Error::NonFinite("problem functions at the initial point".into()));
    }
    let mut state = IterateState::initial(x0, &eval.g, ne);
    let initial = compute_convergence_metrics(&eval, &state, eval.f);
    let mut trace = ConvergenceTrace::default();
    let mut previous = initial;
    let mut step_control_on = false;

    if initial.converged(options) {
        return Ok(IpmResult { state, status: SolveStatus::Converged, initial, trace });
    }

    let mut status = SolveStatus::MaxIterations;
    for t in 1..=options.max_iterations {
        let hessian = problem.lagrangian_hessian(&state.x, &state.lambda, &state.mu);
        let system =
            assemble_kkt(&eval, &hessian, &state).map_err(|e| Error::Backend { iteration: t, source: Box::new(e) })?;
        let report = backend.solve(&system).map_err(|e| Error::Backend { iteration: t, source: Box::new(e) })?;
        if report.x.iter().any(|v| !v.is_finite()) {
            log::warn!("iteration {t}: non-finite Newton direction");
            status = SolveStatus::Stalled;
            break;
        }
        let mut direction = NewtonDirection::from_solution(&report.x, nx, ni, ne);

        let mut shrinks = 0;
        if step_control_on {
            match step_control(problem, &state, &eval, &hessian, &mut direction, options) {
                Ok(n) => shrinks = n,
                Err(Error::StepUnderflow) => {
                    log::warn!("iteration {t}: step control underflow");
                    status = SolveStatus::Stalled;
                    break;
                }
                Err(e) => return Err(e),
            }
        }

        let (alpha_p, alpha_d) = compute_step_lengths(&state, &direction, options.xi);
        state.x += alpha_p * &direction.dx;
        state.z += alpha_p * &direction.dz;
        state.lambda += alpha_d * &direction.dlambda;
        state.mu += alpha_d * &direction.dmu;
        state.gamma = update_barrier(&state.mu, &state.z, options.sigma);
        state.iteration = t;

        eval = Evaluation::at(problem, &state.x);
        let metrics = compute_convergence_metrics(&eval, &state, previous.objective);
        trace.entries.push(TraceEntry {
            iteration: t,
            metrics,
            alpha_p,
            alpha_d,
            gamma: state.gamma,
            kappa_raw: report.kappa_raw,
            kappa_precond: report.kappa_precond,
            min_slack: state.z.min(),
            min_multiplier: state.mu.min(),
            step_control_shrinks: shrinks,
            solve_residual: report.relative_residual,
            diagnostics: report.diagnostics,
        });
        log::debug!(
            "it {t:3} obj {:.6} feas {:.2e} grad {:.2e} comp {:.2e} cost {:.2e}",
            metrics.objective,
            metrics.feascond,
            metrics.gradcond,
            metrics.compcond,
            metrics.costcond
        );

        if !metrics.is_finite() || !state.is_strictly_positive() {
            status = SolveStatus::Stalled;
            break;
        }
        if metrics.converged(options) {
            status = SolveStatus::Converged;
            break;
        }
        if metrics.feascond > previous.feascond && metrics.gradcond > previous.gradcond {
            step_control_on = true;
        }
        previous = metrics;
    }

    Ok(IpmResult { state, status, initial, trace })
}
