use std::fmt;

use nalgebra::DMatrix;

use super::{c, StateVector, C64};
use crate::{Error, Result};

const DROP_TOLERANCE: f64 = 1e-12;

/// A tensor product of single-qubit Paulis stored as bit masks: qubit `q`
/// carries X when bit `q` of `x` is set, Z when bit `q` of `z` is set, and
/// Y when both are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub qubits: usize,
    pub x: usize,
    pub z: usize,
}

impl PauliString {
    pub fn identity(qubits: usize) -> Self {
        PauliString { qubits, x: 0, z: 0 }
    }

    /// Parse a word such as `"XIZ"`; the leftmost letter is the highest qubit.
    pub fn parse(word: &str) -> Result<Self> {
        let qubits = word.chars().count();
        let (mut x, mut z) = (0, 0);
        for (pos, ch) in word.chars().enumerate() {
            let bit = 1 << (qubits - 1 - pos);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                other => return Err(Error::InvalidOption(format!("unknown Pauli letter `{other}`"))),
            }
        }
        Ok(PauliString { qubits, x, z })
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Nonzero entry of column `col`: row `col ^ x` with this value.
    fn entry(&self, col: usize) -> C64 {
        let sign = if (col & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let phase = match self.y_count() % 4 {
            0 => c(1.0, 0.0),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        };
        phase * sign
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = 1 << self.qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            m[(col ^ self.x, col)] = self.entry(col);
        }
        m
    }

    /// `P|ψ⟩`.
    pub fn apply(&self, amplitudes: &[C64]) -> Vec<C64> {
        let mut out = vec![c(0.0, 0.0); amplitudes.len()];
        for (col, a) in amplitudes.iter().enumerate() {
            out[col ^ self.x] = self.entry(col) * a;
        }
        out
    }

    /// `⟨ψ|P|ψ⟩`, real because Pauli strings are Hermitian.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let amps = state.amplitudes();
        amps.iter().enumerate().map(|(col, a)| (amps[col ^ self.x].conj() * self.entry(col) * a).re).sum()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.qubits).rev() {
            let letter = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            };
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: C64,
    pub string: PauliString,
}

/// `M = Σ c_i P_i` over Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub qubits: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let dim = 1 << self.qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            for col in 0..dim {
                m[(col ^ t.string.x, col)] += t.coefficient * t.string.entry(col);
            }
        }
        m
    }

    /// `⟨ψ|M|ψ⟩` accumulated term by term.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.qubits() != self.qubits {
            return Err(Error::Dimension(format!("{}-qubit operator on {}-qubit state", self.qubits, state.qubits())));
        }
        if self.terms.iter().any(|t| t.coefficient.im.abs() > DROP_TOLERANCE) {
            return Err(Error::NotHermitian);
        }
        Ok(self.terms.iter().map(|t| t.coefficient.re * t.string.expectation(state)).sum())
    }
}

/// Coefficients `c_P = tr(P M) / 2^n` over all `4^n` strings, dropping
/// those below `1e-12` in magnitude.
pub fn pauli_decompose(m: &DMatrix<C64>) -> Result<PauliDecomposition> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!("{}×{} is not a square power-of-two matrix", m.nrows(), m.ncols())));
    }
    let qubits = dim.trailing_zeros() as usize;
    let mut terms = Vec::new();
    for x in 0..dim {
        for z in 0..dim {
            let string = PauliString { qubits, x, z };
            // P is Hermitian, so tr(P M) = Σ_col conj(P[col^x, col]) M[col^x, col]
            let sum: C64 = (0..dim).map(|col| string.entry(col).conj() * m[(col ^ x, col)]).sum();
            let coefficient = sum / dim as f64;
            if coefficient.norm() > DROP_TOLERANCE {
                terms.push(PauliTerm { coefficient, string });
            }
        }
    }
    Ok(PauliDecomposition { qubits, terms })
}

pub fn pauli_decompose_real(m: &DMatrix<f64>) -> Result<PauliDecomposition> {
    pauli_decompose(&m.map(|v| c(v, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, data: &[f64]) -> DMatrix<C64> {
        DMatrix::from_row_slice(rows, rows, data).map(|v| c(v, 0.0))
    }

    fn terms(d: &PauliDecomposition) -> Vec<(String, C64)> {
        d.terms.iter().map(|t| (t.string.to_string(), t.coefficient)).collect()
    }

    #[test]
    fn single_qubit_examples() {
        assert_eq!(terms(&pauli_decompose(&real(2, &[1.0, 0.0, 0.0, 1.0])).unwrap()), vec![("I".into(), c(1.0, 0.0))]);
        assert_eq!(terms(&pauli_decompose(&real(2, &[1.0, 0.0, 0.0, -1.0])).unwrap()), vec![("Z".into(), c(1.0, 0.0))]);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = pauli_decompose(&real(2, &[h, h, h, -h])).unwrap();
        let t = terms(&d);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].0, "Z");
        assert_eq!(t[1].0, "X");
        assert!(t.iter().all(|(_, v)| (v.re - h).abs() < 1e-15 && v.im == 0.0));
    }

    #[test]
    fn y_has_imaginary_entries() {
        let y = PauliString::parse("Y").unwrap().matrix();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn parse_and_display_agree() {
        for w in ["XIZ", "YYX", "IIII", "Z"] {
            assert_eq!(PauliString::parse(w).unwrap().to_string(), w);
        }
        // highest qubit on the left
        let p = PauliString::parse("XI").unwrap();
        assert_eq!(p.x, 0b10);
        assert!(PauliString::parse("XA").is_err());
    }

    #[test]
    fn tensor_product_ordering() {
        // X on qubit 1 maps |00⟩ to |10⟩ = index 2
        let m = PauliString::parse("XI").unwrap().matrix();
        assert_eq!(m[(2, 0)], c(1.0, 0.0));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(pauli_decompose(&DMatrix::zeros(3, 3)).is_err());
    }
}
