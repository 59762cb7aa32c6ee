use nalgebra::{DMatrix, DVector};

use super::linear::{push_bounds, LinearRows};
use super::{generation_cost, interior_start, VariableBlock, VariableLayout};
use crate::network::{dc_susceptance, DcNetwork, PowerCase};
use crate::Result;

/// DC OPF: variables are bus angles and generator active power; all
/// constraints are affine.
#[derive(Debug, Clone)]
pub struct DcModel {
    case: PowerCase,
    layout: VariableLayout,
    network: DcNetwork,
    eq: LinearRows,
    ineq: LinearRows,
    /// Rows of `ineq` holding branch flow limits, as (branch, first row).
    flow_rows: Vec<(usize, usize)>,
}

impl DcModel {
    pub fn new(case: &PowerCase) -> Result<Self> {
        let nb = case.buses.len();
        let ng = case.generators.len();
        let layout = VariableLayout::dc(nb, ng);
        let nx = layout.len();
        let network = dc_susceptance(case)?;
        let index = case.bus_index();
        let theta = |i| layout.index(VariableBlock::Angle, i);
        let pg = |k| layout.index(VariableBlock::RealPower, k);

        let mut eq = LinearRows::new(nx);
        for (i, bus) in case.buses.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> =
                (0..nb).filter(|&j| network.bbus[(i, j)] != 0.0).map(|j| (theta(j), network.bbus[(i, j)])).collect();
            for (k, g) in case.generators.iter().enumerate() {
                if index[&g.bus] == i {
                    coeffs.push((pg(k), -1.0));
                }
            }
            eq.push(coeffs, network.pbus_shift[i] + bus.pd + bus.gs);
        }
        let r = case.reference_bus();
        eq.push(vec![(theta(r), 1.0)], -case.buses[r].va0.to_radians());

        let mut ineq = LinearRows::new(nx);
        for (k, g) in case.generators.iter().enumerate() {
            push_bounds(&mut eq, &mut ineq, pg(k), g.pmin, g.pmax);
        }
        for (i, bus) in case.buses.iter().enumerate() {
            if let Some((lo, hi)) = bus.angle_limits {
                push_bounds(&mut eq, &mut ineq, theta(i), lo.to_radians(), hi.to_radians());
            }
        }
        let mut flow_rows = Vec::new();
        for (k, br) in case.branches.iter().enumerate() {
            if !br.is_limited() {
                continue;
            }
            flow_rows.push((k, ineq.len()));
            let coeffs: Vec<(usize, f64)> =
                (0..nb).filter(|&j| network.bf[(k, j)] != 0.0).map(|j| (theta(j), network.bf[(k, j)])).collect();
            let negated = coeffs.iter().map(|&(j, a)| (j, -a)).collect();
            ineq.push(coeffs, network.pf_shift[k] - br.s_max);
            ineq.push(negated, -network.pf_shift[k] - br.s_max);
        }

        Ok(DcModel { case: case.clone(), layout, network, eq, ineq, flow_rows })
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn network(&self) -> &DcNetwork {
        &self.network
    }

    pub fn case(&self) -> &PowerCase {
        &self.case
    }

    /// Real power flow on every branch (per-unit, from end).
    pub fn branch_flows(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.layout.range(VariableBlock::Angle).unwrap();
        let theta = x.rows(r.start, r.len());
        &self.network.bf * theta + &self.network.pf_shift
    }

    /// Nodal balance residual, one entry per bus.
    pub fn balance_residual(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eq.eval(x).rows(0, self.case.buses.len()).into_owned()
    }

    pub fn flow_rows(&self) -> &[(usize, usize)] {
        &self.flow_rows
    }

    pub(crate) fn num_equalities(&self) -> usize {
        self.eq.len()
    }

    pub(crate) fn num_inequalities(&self) -> usize {
        self.ineq.len()
    }

    fn pg<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        &x.as_slice()[self.layout.range(VariableBlock::RealPower).unwrap()]
    }

    pub(crate) fn objective(&self, x: &DVector<f64>) -> f64 {
        generation_cost(&self.case, self.pg(x)).0
    }

    pub(crate) fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, grad, _) = generation_cost(&self.case, self.pg(x));
        let mut out = DVector::zeros(self.layout.len());
        let r = self.layout.range(VariableBlock::RealPower).unwrap();
        out.rows_mut(r.start, r.len()).copy_from_slice(&grad);
        out
    }

    pub(crate) fn objective_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (_, _, hess) = generation_cost(&self.case, self.pg(x));
        let mut out = DMatrix::zeros(self.layout.len(), self.layout.len());
        let r = self.layout.range(VariableBlock::RealPower).unwrap();
        for (k, h) in hess.into_iter().enumerate() {
            out[(r.start + k, r.start + k)] = h;
        }
        out
    }

    pub(crate) fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eq.eval(x)
    }

    pub(crate) fn equality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.eq.jacobian()
    }

    pub(crate) fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        self.ineq.eval(x)
    }

    pub(crate) fn inequality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.ineq.jacobian()
    }

    pub(crate) fn lagrangian_hessian(
        &self,
        x: &DVector<f64>,
        _lambda: &DVector<f64>,
        _mu: &DVector<f64>,
    ) -> DMatrix<f64> {
        self.objective_hessian(x)
    }

    pub(crate) fn initial_point(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.layout.len());
        for (i, bus) in self.case.buses.iter().enumerate() {
            x[self.layout.index(VariableBlock::Angle, i)] = bus.va0.to_radians();
        }
        for (k, g) in self.case.generators.iter().enumerate() {
            x[self.layout.index(VariableBlock::RealPower, k)] = interior_start(g.pmin, g.pmax, g.pg0);
        }
        x
    }
}
