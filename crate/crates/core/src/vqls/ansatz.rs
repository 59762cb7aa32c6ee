use serde::{Deserialize, Serialize};

use crate::quantum::{Circuit, Gate, StateVector};
use crate::{Error, Result};

/// Layered ansatz: every layer applies `RZ(ω)·RY(θ)·RZ(φ)` to each qubit and
/// then a ring of CNOTs `q → q+1 mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    pub qubits: usize,
    pub layers: usize,
}

impl Ansatz {
    pub fn new(qubits: usize, layers: usize) -> Result<Self> {
        if qubits == 0 || layers == 0 {
            return Err(Error::InvalidOption(format!("ansatz needs qubits and layers ≥ 1, got {qubits} and {layers}")));
        }
        Ok(Ansatz { qubits, layers })
    }

    pub fn num_params(&self) -> usize {
        3 * self.qubits * self.layers
    }

    /// Gates in application order, each with the index of the angle it
    /// carries.
    pub fn gates(&self, params: &[f64]) -> Result<Vec<(Gate, Option<usize>)>> {
        if params.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "{} angles for {} ansatz parameters",
                params.len(),
                self.num_params()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("ansatz angle".into()));
        }
        let n = self.qubits;
        let mut gates = Vec::with_capacity(self.num_params() + n * self.layers);
        for layer in 0..self.layers {
            for q in 0..n {
                let k = 3 * (layer * n + q);
                gates.push((Gate::Rz(q, params[k]), Some(k)));
                gates.push((Gate::Ry(q, params[k + 1]), Some(k + 1)));
                gates.push((Gate::Rz(q, params[k + 2]), Some(k + 2)));
            }
            if n > 1 {
                for q in 0..n {
                    gates.push((Gate::Cnot { control: q, target: (q + 1) % n }, None));
                }
            }
        }
        Ok(gates)
    }

    pub fn circuit(&self, params: &[f64]) -> Result<Circuit> {
        let mut c = Circuit::new(self.qubits);
        for (g, _) in self.gates(params)? {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        let mut s = StateVector::zero(self.qubits);
        for (g, _) in self.gates(params)? {
            s.apply(&g)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count() {
        assert_eq!(Ansatz::new(3, 4).unwrap().num_params(), 36);
        assert!(Ansatz::new(0, 1).is_err());
        assert!(Ansatz::new(2, 0).is_err());
    }

    #[test]
    fn zero_angles_give_ground_state() {
        let a = Ansatz::new(3, 2).unwrap();
        let s = a.state(&vec![0.0; a.num_params()]).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn each_angle_is_used_once() {
        let a = Ansatz::new(3, 2).unwrap();
        let gates = a.gates(&vec![0.1; a.num_params()]).unwrap();
        let mut seen: Vec<usize> = gates.iter().filter_map(|(_, k)| *k).collect();
        seen.sort();
        assert_eq!(seen, (0..a.num_params()).collect::<Vec<_>>());
        assert_eq!(gates.iter().filter(|(g, _)| matches!(g, Gate::Cnot { .. })).count(), 6);
    }

    #[test]
    fn wrong_parameter_count_is_rejected() {
        let a = Ansatz::new(2, 1).unwrap();
        assert!(a.state(&[0.0; 5]).is_err());
        assert!(a.state(&[f64::NAN; 6]).is_err());
    }
}
