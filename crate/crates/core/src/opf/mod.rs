//! The OPF nonlinear program `min f(x) s.t. h(x) = 0, g(x) <= 0` for the DC
//! and AC formulations, with analytic first and second derivatives.

mod ac;
mod dc;
mod linear;
mod power;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

pub use ac::AcModel;
pub use dc::DcModel;
pub use linear::LinearRows;
pub use power::PowerTerm;

use crate::network::PowerCase;
use crate::{Error, Result};

/// A smooth nonlinear program as seen by the interior point solver.
///
/// Jacobians are returned with one row per constraint and one column per
/// variable.
pub trait NlpProblem {
    fn num_variables(&self) -> usize;
    fn num_equalities(&self) -> usize;
    fn num_inequalities(&self) -> usize;

    fn objective(&self, x: &DVector<f64>) -> f64;
    fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn objective_hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn equalities(&self, x: &DVector<f64>) -> DVector<f64>;
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64>;
    fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Hessian of `f + λᵀh + μᵀg` with respect to `x`.
    fn lagrangian_hessian(&self, x: &DVector<f64>, lambda: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64>;

    fn initial_point(&self) -> DVector<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Dc,
    Ac,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Dc => "dc",
            Formulation::Ac => "ac",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dc" => Ok(Formulation::Dc),
            "ac" => Ok(Formulation::Ac),
            _ => Err(Error::InvalidOption(format!("unknown formulation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableBlock {
    Angle,
    Magnitude,
    RealPower,
    ReactivePower,
}

/// Contiguous blocks of the decision vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    blocks: Vec<(VariableBlock, Range<usize>)>,
}

impl VariableLayout {
    pub fn new(sizes: &[(VariableBlock, usize)]) -> Self {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&(block, n)| {
                let r = start..start + n;
                start += n;
                (block, r)
            })
            .collect();
        VariableLayout { blocks }
    }

    pub fn dc(buses: usize, gens: usize) -> Self {
        Self::new(&[(VariableBlock::Angle, buses), (VariableBlock::RealPower, gens)])
    }

    pub fn ac(buses: usize, gens: usize) -> Self {
        Self::new(&[
            (VariableBlock::Angle, buses),
            (VariableBlock::Magnitude, buses),
            (VariableBlock::RealPower, gens),
            (VariableBlock::ReactivePower, gens),
        ])
    }

    pub fn len(&self) -> usize {
        self.blocks.last().map_or(0, |(_, r)| r.end)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> &[(VariableBlock, Range<usize>)] {
        &self.blocks
    }

    pub fn range(&self, block: VariableBlock) -> Option<Range<usize>> {
        self.blocks.iter().find(|(b, _)| *b == block).map(|(_, r)| r.clone())
    }

    /// Index of element `i` of `block`. Panics if the block is absent.
    pub fn index(&self, block: VariableBlock, i: usize) -> usize {
        let r = self.range(block).expect("block present in layout");
        debug_assert!(i < r.len());
        r.start + i
    }
}

#[derive(Debug, Clone)]
enum Model {
    Dc(DcModel),
    Ac(AcModel),
}

/// An OPF instance built from a case.
#[derive(Debug, Clone)]
pub struct OpfProblem {
    pub formulation: Formulation,
    pub layout: VariableLayout,
    model: Model,
}

pub fn build_dc_problem(case: &PowerCase) -> Result<OpfProblem> {
    case.validate()?;
    let model = DcModel::new(case)?;
    Ok(OpfProblem { formulation: Formulation::Dc, layout: model.layout().clone(), model: Model::Dc(model) })
}

pub fn build_ac_problem(case: &PowerCase) -> Result<OpfProblem> {
    case.validate()?;
    let model = AcModel::new(case)?;
    Ok(OpfProblem { formulation: Formulation::Ac, layout: model.layout().clone(), model: Model::Ac(model) })
}

pub fn build_problem(case: &PowerCase, formulation: Formulation) -> Result<OpfProblem> {
    match formulation {
        Formulation::Dc => build_dc_problem(case),
        Formulation::Ac => build_ac_problem(case),
    }
}

impl OpfProblem {
    /// Generator active power outputs in per-unit.
    pub fn real_power<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        let r = self.layout.range(VariableBlock::RealPower).expect("layout has real power");
        &x.as_slice()[r]
    }

    pub fn angles<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        let r = self.layout.range(VariableBlock::Angle).expect("layout has angles");
        &x.as_slice()[r]
    }

    pub fn dc_model(&self) -> Option<&DcModel> {
        match &self.model {
            Model::Dc(m) => Some(m),
            Model::Ac(_) => None,
        }
    }

    pub fn ac_model(&self) -> Option<&AcModel> {
        match &self.model {
            Model::Ac(m) => Some(m),
            Model::Dc(_) => None,
        }
    }

    /// Checked Lagrangian Hessian.
    pub fn evaluate_lagrangian_hessian(
        &self,
        x: &DVector<f64>,
        lambda: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        if x.len() != self.num_variables()
            || lambda.len() != self.num_equalities()
            || mu.len() != self.num_inequalities()
        {
            return Err(Error::Dimension(format!(
                "expected x/λ/μ of lengths {}/{}/{}, got {}/{}/{}",
                self.num_variables(),
                self.num_equalities(),
                self.num_inequalities(),
                x.len(),
                lambda.len(),
                mu.len()
            )));
        }
        Ok(self.lagrangian_hessian(x, lambda, mu))
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match &$self.model {
            Model::Dc($m) => $e,
            Model::Ac($m) => $e,
        }
    };
}

impl NlpProblem for OpfProblem {
    fn num_variables(&self) -> usize {
        self.layout.len()
    }
    fn num_equalities(&self) -> usize {
        dispatch!(self, m => m.num_equalities())
    }
    fn num_inequalities(&self) -> usize {
        dispatch!(self, m => m.num_inequalities())
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        dispatch!(self, m => m.objective(x))
    }
    fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        dispatch!(self, m => m.objective_gradient(x))
    }
    fn objective_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        dispatch!(self, m => m.objective_hessian(x))
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        dispatch!(self, m => m.equalities(x))
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        dispatch!(self, m => m.equality_jacobian(x))
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        dispatch!(self, m => m.inequalities(x))
    }
    fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        dispatch!(self, m => m.inequality_jacobian(x))
    }
    fn lagrangian_hessian(&self, x: &DVector<f64>, lambda: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
        dispatch!(self, m => m.lagrangian_hessian(x, lambda, mu))
    }
    fn initial_point(&self) -> DVector<f64> {
        dispatch!(self, m => m.initial_point())
    }
}

/// Cost of a dispatch in $/h together with its first and second derivatives
/// with respect to per-unit output.
pub(crate) fn generation_cost(case: &PowerCase, pg: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let base = case.base_mva;
    let mut value = 0.0;
    let mut grad = vec![0.0; pg.len()];
    let mut hess = vec![0.0; pg.len()];
    for c in &case.costs {
        let p = pg[c.generator] * base;
        value += c.eval(p);
        grad[c.generator] = c.derivative(p) * base;
        hess[c.generator] = c.second_derivative(p) * base * base;
    }
    (value, grad, hess)
}

/// Midpoint of finite bounds, otherwise the fallback clipped into them.
pub(crate) fn interior_start(lo: f64, hi: f64, fallback: f64) -> f64 {
    if lo.is_finite() && hi.is_finite() && lo.abs() < linear::INFINITE_BOUND && hi.abs() < linear::INFINITE_BOUND {
        0.5 * (lo + hi)
    } else {
        fallback.clamp(lo, hi)
    }
}
