use nalgebra::DMatrix;

use super::{c, ry, StateVector, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        control: usize,
        target: usize,
    },
    /// `unitary` acts on `targets` (first target is the low bit of its
    /// local index), optionally conditioned on one control qubit.
    ControlledUnitary {
        control: Option<usize>,
        targets: Vec<usize>,
        unitary: DMatrix<C64>,
    },
    /// Ry on `target` with angle `angles[k]` where `k` is the value held
    /// by `controls` (first control is the low bit).
    MultiplexedRy {
        controls: Vec<usize>,
        target: usize,
        angles: Vec<f64>,
    },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::Cnot { .. } => "cnot",
            Gate::Cz { .. } => "cz",
            Gate::ControlledUnitary { .. } => "cu",
            Gate::MultiplexedRy { .. } => "mry",
        }
    }

    /// Every qubit the gate touches, controls first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Cnot { control, target } | Gate::Cz { control, target } => {
                vec![*control, *target]
            }
            Gate::ControlledUnitary { control, targets, .. } => control.iter().chain(targets).copied().collect(),
            Gate::MultiplexedRy { controls, target, .. } => controls.iter().chain([target]).copied().collect(),
            _ => self.targets(),
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => {
                vec![*q]
            }
            Gate::Cnot { target, .. } | Gate::Cz { target, .. } | Gate::MultiplexedRy { target, .. } => vec![*target],
            Gate::ControlledUnitary { targets, .. } => targets.clone(),
        }
    }

    pub(super) fn single_qubit_matrix(&self) -> [[C64; 2]; 2] {
        let z = c(0.0, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate::H(_) => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
            Gate::X(_) => super::gate_x(),
            Gate::Y(_) => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
            Gate::Z(_) => super::gate_z(),
            Gate::Rx(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Ry(_, t) => ry(t),
            Gate::Rz(_, t) => [[C64::from_polar(1.0, -t / 2.0), z], [z, C64::from_polar(1.0, t / 2.0)]],
            _ => unreachable!("not a single-qubit gate"),
        }
    }

    pub(super) fn check(&self, qubits: usize) -> Result<()> {
        let used = self.qubits();
        if let Some(q) = used.iter().find(|&&q| q >= qubits) {
            return Err(Error::InvalidCircuit(format!(
                "{} acts on qubit {q} of a {qubits}-qubit register",
                self.name()
            )));
        }
        for (i, a) in used.iter().enumerate() {
            if used[..i].contains(a) {
                return Err(Error::InvalidCircuit(format!("{} uses qubit {a} twice", self.name())));
            }
        }
        match self {
            Gate::ControlledUnitary { targets, unitary, .. } => {
                let k = 1 << targets.len();
                if unitary.nrows() != k || unitary.ncols() != k {
                    return Err(Error::InvalidCircuit(format!(
                        "{}×{} unitary on {} targets",
                        unitary.nrows(),
                        unitary.ncols(),
                        targets.len()
                    )));
                }
            }
            Gate::MultiplexedRy { controls, angles, .. } if angles.len() != 1 << controls.len() => {
                return Err(Error::InvalidCircuit(format!("{} angles for {} controls", angles.len(), controls.len())));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Rx(q, t) => Gate::Rx(*q, -t),
            Gate::Ry(q, t) => Gate::Ry(*q, -t),
            Gate::Rz(q, t) => Gate::Rz(*q, -t),
            Gate::ControlledUnitary { control, targets, unitary } => {
                Gate::ControlledUnitary { control: *control, targets: targets.clone(), unitary: unitary.adjoint() }
            }
            Gate::MultiplexedRy { controls, target, angles } => Gate::MultiplexedRy {
                controls: controls.clone(),
                target: *target,
                angles: angles.iter().map(|a| -a).collect(),
            },
            g => g.clone(),
        }
    }
}

/// Ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit { qubits, gates: Vec::new() }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.check(self.qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(self)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { qubits: self.qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn run(&self, state: &mut StateVector) -> Result<()> {
        if state.qubits() != self.qubits {
            return Err(Error::Dimension(format!("{}-qubit circuit on a {}-qubit state", self.qubits, state.qubits())));
        }
        for g in &self.gates {
            state.apply(g)?;
        }
        Ok(())
    }

    /// Dense unitary, column `j` being the image of basis state `j`.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        let dim = 1 << self.qubits;
        let mut u = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut amps = vec![c(0.0, 0.0); dim];
            amps[j] = c(1.0, 0.0);
            let mut s = StateVector::prepare(amps)?;
            self.run(&mut s)?;
            u.set_column(j, &s.to_vector());
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::max_abs;

    fn assert_unitary(u: &DMatrix<C64>) {
        let eye = DMatrix::<C64>::identity(u.nrows(), u.ncols());
        assert!(max_abs(&(u.adjoint() * u - eye)) < 1e-12);
    }

    #[test]
    fn every_gate_is_unitary() {
        let mut u = DMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64, (i + 2 * j) as f64 * 0.5));
        u = u.qr().q();
        let gates = vec![
            Gate::H(0),
            Gate::X(1),
            Gate::Y(2),
            Gate::Z(0),
            Gate::Rx(1, 0.3),
            Gate::Ry(2, -1.1),
            Gate::Rz(0, 2.5),
            Gate::Cnot { control: 2, target: 0 },
            Gate::Cz { control: 0, target: 1 },
            Gate::ControlledUnitary { control: Some(1), targets: vec![2, 0], unitary: u.clone() },
            Gate::ControlledUnitary { control: None, targets: vec![0, 1], unitary: u },
            Gate::MultiplexedRy { controls: vec![0, 2], target: 1, angles: vec![0.1, 0.2, -0.7, 3.0] },
        ];
        for g in gates {
            let mut circuit = Circuit::new(3);
            circuit.push(g.clone()).unwrap();
            let m = circuit.unitary().unwrap();
            assert_unitary(&m);
            let mut round_trip = circuit.clone();
            round_trip.append(&circuit.inverse()).unwrap();
            let eye = DMatrix::<C64>::identity(8, 8);
            assert!(max_abs(&(round_trip.unitary().unwrap() - eye)) < 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn pauli_gates_match_rotations_at_pi() {
        for (p, r) in [(Gate::X(0), Gate::Rx(0, std::f64::consts::PI)), (Gate::Y(0), Gate::Ry(0, std::f64::consts::PI))]
        {
            let mut a = Circuit::new(1);
            a.push(p).unwrap();
            let mut b = Circuit::new(1);
            b.push(r).unwrap();
            // equal up to the global phase −i
            let diff = a.unitary().unwrap() * c(0.0, -1.0) - b.unitary().unwrap();
            assert!(max_abs(&diff) < 1e-15);
        }
    }

    #[test]
    fn malformed_gates_are_rejected() {
        let mut circuit = Circuit::new(2);
        let bad = Gate::ControlledUnitary { control: None, targets: vec![0], unitary: DMatrix::identity(4, 4) };
        assert!(circuit.push(bad).is_err());
        let bad = Gate::MultiplexedRy { controls: vec![0], target: 1, angles: vec![0.0] };
        assert!(circuit.push(bad).is_err());
        assert!(circuit.is_empty());
    }
}
