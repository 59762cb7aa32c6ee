//! Power-system case data: buses, generators, branches and cost curves, all
//! held in per-unit on the case's MVA base.

mod admittance;
mod fixtures;
mod parse;

use std::collections::HashMap;

pub use admittance::{branch_admittances, build_ybus, dc_susceptance, AdmittanceMatrix, BranchAdmittance, DcNetwork};
pub use fixtures::{bundled_case, bundled_case_names, bundled_case_source};
pub use parse::{load_case, parse_case, CaseFormat};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusType {
    Pq,
    Pv,
    Ref,
}

impl BusType {
    fn from_code(code: f64) -> Option<BusType> {
        match code as i64 {
            1 => Some(BusType::Pq),
            2 => Some(BusType::Pv),
            3 => Some(BusType::Ref),
            _ => None,
        }
    }
}

/// A bus. Powers are per-unit, angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct BusRecord {
    pub id: usize,
    pub bus_type: BusType,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vmax: f64,
    pub vmin: f64,
    pub va0: f64,
    pub vm0: f64,
    /// Optional angle bounds in degrees.
    pub angle_limits: Option<(f64, f64)>,
}

/// A generator. Powers are per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRecord {
    pub bus: usize,
    pub pmax: f64,
    pub pmin: f64,
    pub qmax: f64,
    pub qmin: f64,
    pub pg0: f64,
    pub qg0: f64,
    pub in_service: bool,
}

/// A line or transformer in the standard pi model.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_charging: f64,
    /// Off-nominal turns ratio, 1.0 for lines.
    pub tap: f64,
    /// Phase shift in degrees.
    pub shift: f64,
    /// Apparent power limit in per-unit, 0 for unlimited.
    pub s_max: f64,
    pub in_service: bool,
}

impl BranchRecord {
    pub fn is_limited(&self) -> bool {
        self.s_max > 0.0
    }
}

/// Polynomial cost in $/h as a function of output in MW, coefficients in
/// descending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    pub generator: usize,
    pub coefficients: Vec<f64>,
}

impl CostCurve {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, p_mw: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, c| acc * p_mw + c)
    }

    pub fn derivative(&self, p_mw: f64) -> f64 {
        let n = self.degree();
        self.coefficients[..n].iter().enumerate().fold(0.0, |acc, (k, c)| acc * p_mw + c * (n - k) as f64)
    }

    pub fn second_derivative(&self, p_mw: f64) -> f64 {
        let n = self.degree();
        if n < 2 {
            return 0.0;
        }
        self.coefficients[..n - 1].iter().enumerate().fold(0.0, |acc, (k, c)| {
            let d = (n - k) as f64;
            acc * p_mw + c * d * (d - 1.0)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub generators: Vec<GeneratorRecord>,
    pub branches: Vec<BranchRecord>,
    /// One curve per generator, in generator order.
    pub costs: Vec<CostCurve>,
}

impl PowerCase {
    pub fn to_per_unit(&self, mw: f64) -> f64 {
        mw / self.base_mva
    }

    pub fn to_mw(&self, pu: f64) -> f64 {
        pu * self.base_mva
    }

    /// Map from external bus number to position in `buses`.
    pub fn bus_index(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn reference_bus(&self) -> usize {
        self.buses.iter().position(|b| b.bus_type == BusType::Ref).expect("validated case has a reference bus")
    }

    /// Total generation cost in $/h for a dispatch given in per-unit.
    pub fn total_cost(&self, pg: &[f64]) -> f64 {
        self.costs.iter().map(|c| c.eval(self.to_mw(pg[c.generator]))).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::Validation(format!("baseMVA must be positive, got {}", self.base_mva)));
        }
        if self.buses.is_empty() {
            return Err(Error::Validation("case has no buses".into()));
        }
        let index = self.bus_index();
        if index.len() != self.buses.len() {
            return Err(Error::Validation("duplicate bus numbers".into()));
        }
        match self.buses.iter().filter(|b| b.bus_type == BusType::Ref).count() {
            0 => return Err(Error::Validation("missing REF bus".into())),
            1 => {}
            n => return Err(Error::Validation(format!("{n} REF buses, expected exactly one"))),
        }
        for b in &self.buses {
            if b.vmin > b.vmax {
                return Err(Error::Validation(format!("bus {}: Vmin > Vmax", b.id)));
            }
            if b.vm0 < b.vmin - 1e-9 || b.vm0 > b.vmax + 1e-9 {
                return Err(Error::Validation(format!(
                    "bus {}: initial magnitude {} outside [{}, {}]",
                    b.id, b.vm0, b.vmin, b.vmax
                )));
            }
            if let Some((lo, hi)) = b.angle_limits {
                if lo > hi {
                    return Err(Error::Validation(format!("bus {}: angle limits reversed", b.id)));
                }
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if !index.contains_key(&g.bus) {
                return Err(Error::Validation(format!("generator {k} references unknown bus {}", g.bus)));
            }
            if g.pmin > g.pmax || g.qmin > g.qmax {
                return Err(Error::Validation(format!("generator {k}: reversed limits")));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(Error::Validation(format!("branch {k} references unknown bus {end}")));
                }
            }
            if br.from == br.to {
                return Err(Error::Validation(format!("branch {k} connects bus {} to itself", br.from)));
            }
            if br.x == 0.0 {
                return Err(Error::Validation(format!("branch {k} has zero reactance")));
            }
        }
        if self.costs.len() != self.generators.len() {
            return Err(Error::Validation(format!(
                "{} cost curves for {} generators",
                self.costs.len(),
                self.generators.len()
            )));
        }
        for (k, c) in self.costs.iter().enumerate() {
            if c.coefficients.is_empty() {
                return Err(Error::Validation(format!("cost curve {k} has no coefficients")));
            }
            if c.generator != k {
                return Err(Error::Validation(format!("cost curve {k} is not aligned with its generator")));
            }
            let g = &self.generators[k];
            for p in [g.pmin, g.pmax] {
                if !c.eval(self.to_mw(p)).is_finite() {
                    return Err(Error::Validation(format!("cost curve {k} is not finite on its range")));
                }
            }
        }
        Ok(())
    }
}
