use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::PowerCase;
use crate::{Error, Result};

/// Complex nodal admittance matrix with the bus ordering it was built in.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub y: DMatrix<Complex64>,
    /// External bus number of each row.
    pub bus_ids: Vec<usize>,
}

impl AdmittanceMatrix {
    pub fn conductance(&self) -> DMatrix<f64> {
        self.y.map(|v| v.re)
    }

    pub fn susceptance(&self) -> DMatrix<f64> {
        self.y.map(|v| v.im)
    }
}

/// Two-port admittances of one branch, indexed by internal bus position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub from: usize,
    pub to: usize,
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

pub fn branch_admittances(case: &PowerCase) -> Result<Vec<BranchAdmittance>> {
    let index = case.bus_index();
    case.branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            let z = Complex64::new(br.r, br.x);
            if z.norm() == 0.0 {
                return Err(Error::ZeroImpedance { branch: k });
            }
            let ys = z.inv();
            let ratio = Complex64::from_polar(br.tap, br.shift.to_radians());
            let ytt = ys + Complex64::new(0.0, br.b_charging / 2.0);
            Ok(BranchAdmittance {
                from: index[&br.from],
                to: index[&br.to],
                yff: ytt / (ratio * ratio.conj()),
                yft: -ys / ratio.conj(),
                ytf: -ys / ratio,
                ytt,
            })
        })
        .collect()
}

pub fn build_ybus(case: &PowerCase) -> Result<AdmittanceMatrix> {
    let n = case.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for ba in branch_admittances(case)? {
        y[(ba.from, ba.from)] += ba.yff;
        y[(ba.from, ba.to)] += ba.yft;
        y[(ba.to, ba.from)] += ba.ytf;
        y[(ba.to, ba.to)] += ba.ytt;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += Complex64::new(bus.gs, bus.bs);
    }
    Ok(AdmittanceMatrix { y, bus_ids: case.buses.iter().map(|b| b.id).collect() })
}

/// Linear DC network model: nodal injections `P = bbus θ + pbus_shift` and
/// branch flows `Pf = bf θ + pf_shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcNetwork {
    pub bbus: DMatrix<f64>,
    pub pbus_shift: DVector<f64>,
    pub bf: DMatrix<f64>,
    pub pf_shift: DVector<f64>,
    /// Buses with no incident branch; their rows of `bbus` are zero.
    pub isolated_buses: Vec<usize>,
}

impl DcNetwork {
    pub fn has_singular_rows(&self) -> bool {
        !self.isolated_buses.is_empty()
    }
}

pub fn dc_susceptance(case: &PowerCase) -> Result<DcNetwork> {
    let n = case.buses.len();
    let m = case.branches.len();
    let index = case.bus_index();
    let mut bbus = DMatrix::zeros(n, n);
    let mut bf = DMatrix::zeros(m, n);
    let mut pf_shift = DVector::zeros(m);
    let mut pbus_shift = DVector::zeros(n);
    let mut degree = vec![0usize; n];

    for (k, br) in case.branches.iter().enumerate() {
        if br.x == 0.0 {
            return Err(Error::ZeroImpedance { branch: k });
        }
        let b = 1.0 / (br.x * br.tap);
        let (f, t) = (index[&br.from], index[&br.to]);
        bf[(k, f)] = b;
        bf[(k, t)] = -b;
        bbus[(f, f)] += b;
        bbus[(f, t)] -= b;
        bbus[(t, f)] -= b;
        bbus[(t, t)] += b;
        let shift = -b * br.shift.to_radians();
        pf_shift[k] = shift;
        pbus_shift[f] += shift;
        pbus_shift[t] -= shift;
        degree[f] += 1;
        degree[t] += 1;
    }

    let isolated_buses = (0..n).filter(|&i| degree[i] == 0).collect();
    Ok(DcNetwork { bbus, pbus_shift, bf, pf_shift, isolated_buses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{BranchRecord, BusRecord, BusType, CostCurve, GeneratorRecord};

    fn bus(id: usize, bus_type: BusType) -> BusRecord {
        BusRecord {
            id,
            bus_type,
            pd: 0.0,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
            vmax: 1.1,
            vmin: 0.9,
            va0: 0.0,
            vm0: 1.0,
            angle_limits: None,
        }
    }

    fn line(from: usize, to: usize, r: f64, x: f64) -> BranchRecord {
        BranchRecord { from, to, r, x, b_charging: 0.0, tap: 1.0, shift: 0.0, s_max: 0.0, in_service: true }
    }

    fn case(buses: Vec<BusRecord>, branches: Vec<BranchRecord>) -> PowerCase {
        PowerCase {
            name: "t".into(),
            base_mva: 100.0,
            buses,
            generators: vec![GeneratorRecord {
                bus: 1,
                pmax: 1.0,
                pmin: 0.0,
                qmax: 1.0,
                qmin: -1.0,
                pg0: 0.0,
                qg0: 0.0,
                in_service: true,
            }],
            branches,
            costs: vec![CostCurve { generator: 0, coefficients: vec![1.0, 0.0] }],
        }
    }

    #[test]
    fn two_bus_reactance_only() {
        let c = case(vec![bus(1, BusType::Ref), bus(2, BusType::Pq)], vec![line(1, 2, 0.0, 1.0)]);
        let y = build_ybus(&c).unwrap().y;
        let j = Complex64::new(0.0, 1.0);
        assert_eq!(y[(0, 0)], -j);
        assert_eq!(y[(0, 1)], j);
        assert_eq!(y[(1, 0)], j);
        assert_eq!(y[(1, 1)], -j);
    }

    #[test]
    fn single_bus_without_branches_is_zero() {
        let c = case(vec![bus(1, BusType::Ref)], vec![]);
        let y = build_ybus(&c).unwrap().y;
        assert_eq!(y.shape(), (1, 1));
        assert_eq!(y[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_impedance_is_rejected() {
        let c = case(vec![bus(1, BusType::Ref), bus(2, BusType::Pq)], vec![line(1, 2, 0.0, 0.0)]);
        assert!(matches!(build_ybus(&c), Err(Error::ZeroImpedance { branch: 0 })));
        assert!(matches!(dc_susceptance(&c), Err(Error::ZeroImpedance { branch: 0 })));
    }

    #[test]
    fn dc_two_bus() {
        let c = case(vec![bus(1, BusType::Ref), bus(2, BusType::Pq)], vec![line(1, 2, 0.0, 0.5)]);
        let dc = dc_susceptance(&c).unwrap();
        assert_eq!(dc.bbus, DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
        assert!(!dc.has_singular_rows());
    }

    #[test]
    fn dc_isolated_bus_is_flagged() {
        let c = case(vec![bus(1, BusType::Ref), bus(2, BusType::Pq), bus(3, BusType::Pq)], vec![line(1, 2, 0.0, 0.5)]);
        let dc = dc_susceptance(&c).unwrap();
        assert!(dc.has_singular_rows());
        assert_eq!(dc.isolated_buses, vec![2]);
    }
}
