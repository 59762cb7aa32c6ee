//! Exact statevector simulation.
//!
//! Qubit `q` is bit `q` of the basis-state index (little-endian).

mod circuit;
mod operator;
mod pauli;

pub use circuit::{Circuit, Gate};
pub use operator::{expectation, is_hermitian, unitary_from_hamiltonian, ShotSampler};
pub use pauli::{pauli_decompose, pauli_decompose_real, PauliDecomposition, PauliString, PauliTerm};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        StateVector { qubits, amplitudes }
    }

    /// Load a unit vector of length `2^n` as amplitudes.
    pub fn prepare(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!("state length {len} is not a power of two")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector { qubits: len.trailing_zeros() as usize, amplitudes })
    }

    /// Wrap amplitudes without the norm check, for adjoint vectors.
    pub(crate) fn unnormalized(amplitudes: Vec<C64>) -> Self {
        StateVector { qubits: amplitudes.len().trailing_zeros() as usize, amplitudes }
    }

    pub fn from_real(v: &DVector<f64>) -> Result<Self> {
        Self::prepare(v.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Place `inner` on the lowest qubits of a wider register, the rest in `|0⟩`.
    pub fn extend(inner: &StateVector, qubits: usize) -> Result<Self> {
        if qubits < inner.qubits {
            return Err(Error::Dimension(format!("cannot fit {} qubits into {qubits}", inner.qubits)));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[..inner.dim()].copy_from_slice(&inner.amplitudes);
        Ok(StateVector { qubits, amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Probability that the qubits in `mask` read out as the bits of `value`.
    pub fn probability(&self, mask: usize, value: usize) -> f64 {
        self.amplitudes.iter().enumerate().filter(|(i, _)| i & mask == value & mask).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Project onto the outcome `value` of the qubits in `mask` and
    /// renormalize. Returns the outcome probability; the state is left
    /// unchanged when it is zero.
    pub fn post_select(&mut self, mask: usize, value: usize) -> f64 {
        let p = self.probability(mask, value);
        if p == 0.0 {
            return 0.0;
        }
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a = if i & mask == value & mask { *a * scale } else { C64::new(0.0, 0.0) };
        }
        p
    }

    /// Amplitudes of the lowest `qubits` qubits with every higher qubit in `|0⟩`.
    pub fn low_register(&self, qubits: usize) -> DVector<C64> {
        DVector::from_column_slice(&self.amplitudes[..1 << qubits])
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.qubits)?;
        match gate {
            Gate::Cnot { control, target } => self.apply_controlled_1q(1 << control, *target, gate_x()),
            Gate::Cz { control, target } => self.apply_controlled_1q(1 << control, *target, gate_z()),
            Gate::ControlledUnitary { control, targets, unitary } => self.apply_controlled(*control, targets, unitary),
            Gate::MultiplexedRy { controls, target, angles } => self.apply_multiplexed_ry(controls, *target, angles),
            single => self.apply_controlled_1q(0, single.targets()[0], single.single_qubit_matrix()),
        }
        Ok(())
    }

    /// Apply a 2×2 unitary to `target` on the subspace where every bit of
    /// `controls` is set.
    fn apply_controlled_1q(&mut self, controls: usize, target: usize, m: [[C64; 2]; 2]) {
        let bit = 1 << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 || i & controls != controls {
                continue;
            }
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn apply_controlled(&mut self, control: Option<usize>, targets: &[usize], u: &DMatrix<C64>) {
        let controls = control.map_or(0, |c| 1 << c);
        let target_mask: usize = targets.iter().map(|t| 1 << t).sum();
        let k = u.nrows();
        let offsets: Vec<usize> =
            (0..k).map(|local| targets.iter().enumerate().map(|(j, t)| ((local >> j) & 1) << t).sum()).collect();
        let mut gathered = DVector::zeros(k);
        for base in 0..self.amplitudes.len() {
            if base & target_mask != 0 || base & controls != controls {
                continue;
            }
            for (slot, off) in offsets.iter().enumerate() {
                gathered[slot] = self.amplitudes[base | off];
            }
            let out = u * &gathered;
            for (slot, off) in offsets.iter().enumerate() {
                self.amplitudes[base | off] = out[slot];
            }
        }
    }

    fn apply_multiplexed_ry(&mut self, controls: &[usize], target: usize, angles: &[f64]) {
        let bit = 1 << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 {
                continue;
            }
            let select: usize = controls.iter().enumerate().map(|(j, c)| ((i >> c) & 1) << j).sum();
            let m = ry(angles[select]);
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn gate_x() -> [[C64; 2]; 2] {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

fn gate_z() -> [[C64; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

fn ry(theta: f64) -> [[C64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}
