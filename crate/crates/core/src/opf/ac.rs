use nalgebra::{DMatrix, DVector};

use super::linear::{push_bounds, LinearRows};
use super::power::{LocalDerivatives, PowerTerm};
use super::{generation_cost, interior_start, VariableBlock, VariableLayout};
use crate::network::{branch_admittances, build_ybus, AdmittanceMatrix, PowerCase};
use crate::Result;

/// Squared apparent power limit at one end of a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowLimit {
    pub branch: usize,
    pub term: PowerTerm,
    pub s_max: f64,
}

/// AC OPF in polar coordinates.
///
/// Equalities are ordered as real power balance per bus, reactive power
/// balance per bus, then affine rows (reference angle and degenerate
/// bounds). Inequalities are affine bound rows followed by squared flow
/// limits at the from and to end of every limited branch.
#[derive(Debug, Clone)]
pub struct AcModel {
    case: PowerCase,
    layout: VariableLayout,
    ybus: AdmittanceMatrix,
    injections: Vec<Vec<PowerTerm>>,
    gens_at_bus: Vec<Vec<usize>>,
    eq: LinearRows,
    ineq: LinearRows,
    flows: Vec<FlowLimit>,
}

impl AcModel {
    pub fn new(case: &PowerCase) -> Result<Self> {
        let nb = case.buses.len();
        let ng = case.generators.len();
        let layout = VariableLayout::ac(nb, ng);
        let nx = layout.len();
        let ybus = build_ybus(case)?;
        let index = case.bus_index();

        let injections = (0..nb)
            .map(|i| {
                let yii = ybus.y[(i, i)];
                let mut terms = vec![PowerTerm::self_term(i, yii.re, yii.im)];
                for j in 0..nb {
                    let yij = ybus.y[(i, j)];
                    if j != i && (yij.re != 0.0 || yij.im != 0.0) {
                        terms.push(PowerTerm::cross_term(i, j, yij.re, yij.im));
                    }
                }
                terms
            })
            .collect();

        let mut gens_at_bus = vec![Vec::new(); nb];
        for (k, g) in case.generators.iter().enumerate() {
            gens_at_bus[index[&g.bus]].push(k);
        }

        let mut eq = LinearRows::new(nx);
        let r = case.reference_bus();
        eq.push(vec![(layout.index(VariableBlock::Angle, r), 1.0)], -case.buses[r].va0.to_radians());

        let mut ineq = LinearRows::new(nx);
        for (k, g) in case.generators.iter().enumerate() {
            push_bounds(&mut eq, &mut ineq, layout.index(VariableBlock::RealPower, k), g.pmin, g.pmax);
        }
        for (k, g) in case.generators.iter().enumerate() {
            push_bounds(&mut eq, &mut ineq, layout.index(VariableBlock::ReactivePower, k), g.qmin, g.qmax);
        }
        for (i, bus) in case.buses.iter().enumerate() {
            push_bounds(&mut eq, &mut ineq, layout.index(VariableBlock::Magnitude, i), bus.vmin, bus.vmax);
        }
        for (i, bus) in case.buses.iter().enumerate() {
            if let Some((lo, hi)) = bus.angle_limits {
                let j = layout.index(VariableBlock::Angle, i);
                push_bounds(&mut eq, &mut ineq, j, lo.to_radians(), hi.to_radians());
            }
        }

        let mut flows = Vec::new();
        for (k, (br, ba)) in case.branches.iter().zip(branch_admittances(case)?).enumerate() {
            if !br.is_limited() {
                continue;
            }
            let from = PowerTerm { a: ba.from, b: ba.to, gs: ba.yff.re, bs: ba.yff.im, gm: ba.yft.re, bm: ba.yft.im };
            let to = PowerTerm { a: ba.to, b: ba.from, gs: ba.ytt.re, bs: ba.ytt.im, gm: ba.ytf.re, bm: ba.ytf.im };
            flows.push(FlowLimit { branch: k, term: from, s_max: br.s_max });
            flows.push(FlowLimit { branch: k, term: to, s_max: br.s_max });
        }

        Ok(AcModel { case: case.clone(), layout, ybus, injections, gens_at_bus, eq, ineq, flows })
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn ybus(&self) -> &AdmittanceMatrix {
        &self.ybus
    }

    pub fn flow_limits(&self) -> &[FlowLimit] {
        &self.flows
    }

    fn nb(&self) -> usize {
        self.case.buses.len()
    }

    fn offsets(&self) -> (usize, usize) {
        (self.layout.index(VariableBlock::Angle, 0), self.layout.index(VariableBlock::Magnitude, 0))
    }

    fn split<'a>(&self, x: &'a DVector<f64>) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let s = x.as_slice();
        let r = |b| self.layout.range(b).unwrap();
        (
            &s[r(VariableBlock::Angle)],
            &s[r(VariableBlock::Magnitude)],
            &s[r(VariableBlock::RealPower)],
            &s[r(VariableBlock::ReactivePower)],
        )
    }

    pub(crate) fn num_equalities(&self) -> usize {
        2 * self.nb() + self.eq.len()
    }

    pub(crate) fn num_inequalities(&self) -> usize {
        self.ineq.len() + self.flows.len()
    }

    pub(crate) fn objective(&self, x: &DVector<f64>) -> f64 {
        generation_cost(&self.case, self.split(x).2).0
    }

    pub(crate) fn objective_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, grad, _) = generation_cost(&self.case, self.split(x).2);
        let mut out = DVector::zeros(self.layout.len());
        for (k, g) in grad.into_iter().enumerate() {
            out[self.layout.index(VariableBlock::RealPower, k)] = g;
        }
        out
    }

    pub(crate) fn objective_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (_, _, hess) = generation_cost(&self.case, self.split(x).2);
        let n = self.layout.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, h) in hess.into_iter().enumerate() {
            let j = self.layout.index(VariableBlock::RealPower, k);
            out[(j, j)] = h;
        }
        out
    }

    /// Net injections `(P_i, Q_i)` implied by the network at the given state.
    pub fn bus_injections(&self, x: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
        let (theta, v, _, _) = self.split(x);
        self.injections
            .iter()
            .map(|terms| {
                terms.iter().fold((0.0, 0.0), |(p, q), t| {
                    let (tp, tq) = t.value(theta, v);
                    (p + tp, q + tq)
                })
            })
            .unzip()
    }

    pub(crate) fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        let nb = self.nb();
        let (_, _, pg, qg) = self.split(x);
        let (p, q) = self.bus_injections(x);
        let mut h = DVector::zeros(self.num_equalities());
        for (i, bus) in self.case.buses.iter().enumerate() {
            let gp: f64 = self.gens_at_bus[i].iter().map(|&k| pg[k]).sum();
            let gq: f64 = self.gens_at_bus[i].iter().map(|&k| qg[k]).sum();
            h[i] = p[i] - gp + bus.pd;
            h[nb + i] = q[i] - gq + bus.qd;
        }
        self.eq.eval_into(x, &mut h.as_mut_slice()[2 * nb..]);
        h
    }

    pub(crate) fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let nb = self.nb();
        let (theta, v, _, _) = self.split(x);
        let (to, vo) = self.offsets();
        let mut jac = DMatrix::zeros(self.num_equalities(), self.layout.len());
        for (i, terms) in self.injections.iter().enumerate() {
            for t in terms {
                let d = t.derivatives(theta, v);
                for (l, &j) in t.indices(to, vo).iter().enumerate() {
                    jac[(i, j)] += d.dp[l];
                    jac[(nb + i, j)] += d.dq[l];
                }
            }
            for &k in &self.gens_at_bus[i] {
                jac[(i, self.layout.index(VariableBlock::RealPower, k))] -= 1.0;
                jac[(nb + i, self.layout.index(VariableBlock::ReactivePower, k))] -= 1.0;
            }
        }
        self.eq.jacobian_into(&mut jac, 2 * nb);
        jac
    }

    pub(crate) fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        let (theta, v, _, _) = self.split(x);
        let mut g = DVector::zeros(self.num_inequalities());
        let nl = self.ineq.len();
        self.ineq.eval_into(x, &mut g.as_mut_slice()[..nl]);
        for (r, f) in self.flows.iter().enumerate() {
            let (p, q) = f.term.value(theta, v);
            g[nl + r] = p * p + q * q - f.s_max * f.s_max;
        }
        g
    }

    pub(crate) fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (theta, v, _, _) = self.split(x);
        let (to, vo) = self.offsets();
        let nl = self.ineq.len();
        let mut jac = DMatrix::zeros(self.num_inequalities(), self.layout.len());
        self.ineq.jacobian_into(&mut jac, 0);
        for (r, f) in self.flows.iter().enumerate() {
            let d = f.term.derivatives(theta, v);
            for (l, &j) in f.term.indices(to, vo).iter().enumerate() {
                jac[(nl + r, j)] += 2.0 * (d.p * d.dp[l] + d.q * d.dq[l]);
            }
        }
        jac
    }

    pub(crate) fn lagrangian_hessian(
        &self,
        x: &DVector<f64>,
        lambda: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> DMatrix<f64> {
        let nb = self.nb();
        let (theta, v, _, _) = self.split(x);
        let (to, vo) = self.offsets();
        let mut hess = self.objective_hessian(x);

        let mut add = |idx: [usize; 4], local: &dyn Fn(usize, usize) -> f64| {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    hess[(i, j)] += local(a, b);
                }
            }
        };

        for (i, terms) in self.injections.iter().enumerate() {
            let (lp, lq) = (lambda[i], lambda[nb + i]);
            if lp == 0.0 && lq == 0.0 {
                continue;
            }
            for t in terms {
                let d = t.derivatives(theta, v);
                add(t.indices(to, vo), &|a, b| lp * d.hp[a][b] + lq * d.hq[a][b]);
            }
        }

        let nl = self.ineq.len();
        for (r, f) in self.flows.iter().enumerate() {
            let m = mu[nl + r];
            if m == 0.0 {
                continue;
            }
            let d: LocalDerivatives = f.term.derivatives(theta, v);
            add(f.term.indices(to, vo), &|a, b| {
                2.0 * m * (d.dp[a] * d.dp[b] + d.p * d.hp[a][b] + d.dq[a] * d.dq[b] + d.q * d.hq[a][b])
            });
        }
        // local index pairs can alias for self terms; restore exact symmetry
        (&hess + hess.transpose()) * 0.5
    }

    pub(crate) fn initial_point(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.layout.len());
        for (i, bus) in self.case.buses.iter().enumerate() {
            x[self.layout.index(VariableBlock::Angle, i)] = bus.va0.to_radians();
            x[self.layout.index(VariableBlock::Magnitude, i)] = bus.vm0;
        }
        for (k, g) in self.case.generators.iter().enumerate() {
            x[self.layout.index(VariableBlock::RealPower, k)] = interior_start(g.pmin, g.pmax, g.pg0);
            x[self.layout.index(VariableBlock::ReactivePower, k)] = interior_start(g.qmin, g.qmax, g.qg0);
        }
        x
    }
}
