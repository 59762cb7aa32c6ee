use nalgebra::DVector;

use super::{ConvergenceMetrics, Evaluation, IterateState, NewtonDirection, SolverOptions};
use crate::opf::NlpProblem;
use crate::{Error, Result};

/// Fraction-to-boundary step lengths `(α_p, α_d)`.
pub fn compute_step_lengths(state: &IterateState, dir: &NewtonDirection, xi: f64) -> (f64, f64) {
    let ratio = |v: &DVector<f64>, dv: &DVector<f64>| {
        v.iter().zip(dv.iter()).filter(|(_, &d)| d < 0.0).map(|(&v, &d)| -v / d).fold(f64::INFINITY, f64::min)
    };
    let alpha_p = (xi * ratio(&state.z, &dir.dz)).min(1.0);
    let alpha_d = (xi * ratio(&state.mu, &dir.dmu)).min(1.0);
    (alpha_p, alpha_d)
}

/// `σ μᵀZ / ni`, zero when there are no inequalities.
pub fn update_barrier(mu: &DVector<f64>, z: &DVector<f64>, sigma: f64) -> f64 {
    let ni = z.len();
    if ni == 0 {
        0.0
    } else {
        sigma * mu.dot(z) / ni as f64
    }
}

pub fn compute_convergence_metrics(
    eval: &Evaluation,
    state: &IterateState,
    previous_objective: f64,
) -> ConvergenceMetrics {
    let grad = eval.lagrangian_gradient(state);
    let max_g = eval.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let infeasibility = eval.h.amax().max(max_g).max(0.0);
    let x_norm = state.x.amax();
    ConvergenceMetrics {
        feascond: infeasibility / (1.0 + x_norm.max(state.z.amax())),
        gradcond: grad.amax() / (1.0 + state.lambda.amax().max(state.mu.amax())),
        compcond: state.z.dot(&state.mu) / (1.0 + x_norm),
        costcond: (eval.f - previous_objective).abs() / (1.0 + previous_objective.abs()),
        objective: eval.f,
    }
}

/// Barrier Lagrangian `f + λᵀH + μᵀ(G + Z) − γ Σ ln Z`.
pub(crate) fn barrier_lagrangian(f: f64, h: &DVector<f64>, g: &DVector<f64>, state: &IterateState) -> f64 {
    let barrier: f64 = state.z.iter().map(|z| z.ln()).sum();
    f + state.lambda.dot(h) + state.mu.dot(&(g + &state.z)) - state.gamma * barrier
}

/// Shrink the direction by `κ_sc` until the actual change in the barrier
/// Lagrangian along `ΔX` agrees with its quadratic model to within
/// `[1 − η, 1 + η]`. Returns the number of shrinks applied.
pub fn step_control<P: NlpProblem + ?Sized>(
    problem: &P,
    state: &IterateState,
    eval: &Evaluation,
    hessian: &nalgebra::DMatrix<f64>,
    dir: &mut NewtonDirection,
    options: &SolverOptions,
) -> Result<usize> {
    let original = dir.dx.norm();
    if original == 0.0 {
        return Ok(0);
    }
    let l0 = barrier_lagrangian(eval.f, &eval.h, &eval.g, state);
    let grad = eval.lagrangian_gradient(state);
    let mut shrinks = 0;
    loop {
        let psi = grad.dot(&dir.dx) + 0.5 * dir.dx.dot(&(hessian * &dir.dx));
        let x1 = &state.x + &dir.dx;
        let l1 =
            barrier_lagrangian(problem.objective(&x1), &problem.equalities(&x1), &problem.inequalities(&x1), state);
        // Both changes below the rounding level of L: the ratio carries no information.
        let noise = 64.0 * f64::EPSILON * (1.0 + l0.abs());
        let accepted = psi != 0.0 && {
            let rho = (l1 - l0) / psi;
            (rho >= 1.0 - options.eta && rho <= 1.0 + options.eta) || (psi.abs() <= noise && (l1 - l0).abs() <= noise)
        };
        if accepted {
            return Ok(shrinks);
        }
        dir.scale(options.kappa_sc);
        shrinks += 1;
        if dir.dx.norm() < options.step_floor * original {
            return Err(Error::StepUnderflow);
        }
    }
}
