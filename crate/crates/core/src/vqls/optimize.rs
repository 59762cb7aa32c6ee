use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{GradientMethod, Optimizer, VqlsConfig, VqlsCost};
use crate::{Error, Result};

/// One optimizer step of one restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerTraceRow {
    pub restart: usize,
    pub layers: usize,
    pub iteration: usize,
    pub cost: f64,
    /// Lowest cost seen so far in this restart.
    pub best_cost: f64,
    /// Absent for gradient-free search.
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerTrace {
    pub rows: Vec<OptimizerTraceRow>,
}

impl OptimizerTrace {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(["restart", "layers", "iteration", "cost", "best_cost", "grad_norm"]).map_err(ser)?;
        for r in &self.rows {
            w.write_record([
                r.restart.to_string(),
                r.layers.to_string(),
                r.iteration.to_string(),
                format!("{:.12e}", r.cost),
                format!("{:.12e}", r.best_cost),
                r.grad_norm.map(|g| format!("{g:.12e}")).unwrap_or_default(),
            ])
            .map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Result of one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub rows: Vec<OptimizerTraceRow>,
}

/// Tracks the best point and the per-step trace while an optimizer runs.
struct Recorder {
    restart: usize,
    layers: usize,
    best: Option<(f64, Vec<f64>)>,
    rows: Vec<OptimizerTraceRow>,
}

impl Recorder {
    fn new(restart: usize, layers: usize) -> Self {
        Recorder { restart, layers, best: None, rows: Vec::new() }
    }

    fn observe(&mut self, params: &[f64], cost: f64, grad_norm: Option<f64>) {
        if self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
            self.best = Some((cost, params.to_vec()));
        }
        self.rows.push(OptimizerTraceRow {
            restart: self.restart,
            layers: self.layers,
            iteration: self.rows.len(),
            cost,
            best_cost: self.best_cost(),
            grad_norm,
        });
    }

    fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |(c, _)| *c)
    }

    fn finish(self, fallback: Vec<f64>) -> RestartResult {
        let iterations = self.rows.len();
        let (cost, params) = self.best.unwrap_or((f64::INFINITY, fallback));
        RestartResult { params, cost, iterations, rows: self.rows }
    }
}

fn gradient(cost: &VqlsCost, method: GradientMethod, params: &[f64]) -> Result<(f64, Vec<f64>)> {
    match method {
        GradientMethod::Adjoint => cost.cost_and_gradient(params),
        GradientMethod::ParameterShift => Ok((cost.cost(params)?, cost.parameter_shift_gradient(params)?)),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Seeded generator for one restart at one depth.
pub fn restart_rng(seed: u64, layers: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((layers as u64) << 32) | restart as u64);
    rng
}

/// Angles uniform in `(−π, π)`.
pub fn initial_params(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Run the configured optimizer from `start`.
pub fn run_optimizer(
    cost: &VqlsCost,
    config: &VqlsConfig,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
    restart: usize,
) -> Result<RestartResult> {
    let recorder = Recorder::new(restart, cost.ansatz.layers);
    match config.optimizer {
        Optimizer::Lbfgs => lbfgs(cost, config, start, recorder),
        Optimizer::GradientDescent => gradient_descent(cost, config, start, recorder),
        Optimizer::AdaptiveRandomSearch => random_search(cost, config, start, rng, recorder),
    }
}

fn gradient_descent(cost: &VqlsCost, config: &VqlsConfig, start: Vec<f64>, mut rec: Recorder) -> Result<RestartResult> {
    let mut params = start.clone();
    for _ in 0..config.max_iterations {
        let (c, g) = gradient(cost, config.gradient, &params)?;
        rec.observe(&params, c, Some(norm(&g)));
        if c <= config.cost_tolerance {
            break;
        }
        for (p, gi) in params.iter_mut().zip(&g) {
            *p -= config.step_size * gi;
        }
    }
    Ok(rec.finish(start))
}

fn random_search(
    cost: &VqlsCost,
    config: &VqlsConfig,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
    mut rec: Recorder,
) -> Result<RestartResult> {
    let mut params = start.clone();
    let mut current = cost.cost(&params)?;
    rec.observe(&params, current, None);
    let mut radius = config.step_size;
    let mut candidate = params.clone();
    for _ in 1..config.max_iterations {
        if current <= config.cost_tolerance || radius < 1e-12 {
            break;
        }
        for (c, p) in candidate.iter_mut().zip(&params) {
            *c = p + rng.random_range(-radius..radius);
        }
        let c = cost.cost(&candidate)?;
        rec.observe(&candidate, c, None);
        if c < current {
            current = c;
            params.copy_from_slice(&candidate);
            radius = (radius * 1.5).min(PI);
        } else {
            radius *= 0.8;
        }
    }
    Ok(rec.finish(start))
}

struct LbfgsProblem<'a> {
    cost: &'a VqlsCost,
    method: GradientMethod,
    recorder: &'a RefCell<Recorder>,
}

impl CostFunction for LbfgsProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, params: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.cost.cost(params)?)
    }
}

impl Gradient for LbfgsProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, params: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (c, g) = gradient(self.cost, self.method, params)?;
        self.recorder.borrow_mut().observe(params, c, Some(norm(&g)));
        Ok(g)
    }
}

fn lbfgs(cost: &VqlsCost, config: &VqlsConfig, start: Vec<f64>, recorder: Recorder) -> Result<RestartResult> {
    let recorder = RefCell::new(recorder);
    let problem = LbfgsProblem { cost, method: config.gradient, recorder: &recorder };
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(0.0)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| Error::InvalidOption(e.to_string()))?;
    let max_iters = config.max_iterations as u64;
    let target = config.cost_tolerance;
    let init = start.clone();
    if let Err(e) =
        Executor::new(problem, solver).configure(|s| s.param(init).max_iters(max_iters).target_cost(target)).run()
    {
        // typically a line-search breakdown near the optimum; the best point seen is kept
        log::debug!("L-BFGS stopped: {e}");
    }
    Ok(recorder.into_inner().finish(start))
}
