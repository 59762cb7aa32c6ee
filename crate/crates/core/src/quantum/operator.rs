use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PauliDecomposition, StateVector, C64};
use crate::{Error, Result};

const HERMITIAN_TOLERANCE: f64 = 1e-10;

pub fn is_hermitian(m: &DMatrix<C64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let tol = HERMITIAN_TOLERANCE * m.iter().map(|v| v.norm()).fold(1.0, f64::max);
    (0..m.nrows()).all(|i| (0..=i).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

/// `⟨ψ|O|ψ⟩` for a dense Hermitian operator.
pub fn expectation(state: &StateVector, operator: &DMatrix<C64>) -> Result<f64> {
    if operator.nrows() != state.dim() {
        return Err(Error::Dimension(format!(
            "{}×{} operator on a {}-dim state",
            operator.nrows(),
            operator.ncols(),
            state.dim()
        )));
    }
    if !is_hermitian(operator) {
        return Err(Error::NotHermitian);
    }
    let psi = state.to_vector();
    Ok((psi.adjoint() * operator * &psi)[(0, 0)].re)
}

/// `exp(iHt)` from the eigendecomposition of `H`.
pub fn unitary_from_hamiltonian(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    if !is_hermitian(h) {
        return Err(Error::NotHermitian);
    }
    let eig = h.clone().symmetric_eigen();
    let phases =
        DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l * t)));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&phases) * v.adjoint())
}

/// Estimates Pauli-decomposed expectation values from a finite number of
/// simulated measurements per term.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    pub shots: usize,
    rng: ChaCha8Rng,
}

impl ShotSampler {
    pub fn new(shots: usize, seed: u64) -> Self {
        ShotSampler { shots, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Each term's ±1 outcomes are drawn with `P(+1) = (1 + ⟨P⟩)/2`.
    pub fn estimate(&mut self, operator: &PauliDecomposition, state: &StateVector) -> Result<f64> {
        if self.shots == 0 {
            return Err(Error::InvalidOption("shot count must be positive".into()));
        }
        operator.expectation(state)?;
        let mut total = 0.0;
        for term in &operator.terms {
            if term.string.x == 0 && term.string.z == 0 {
                total += term.coefficient.re;
                continue;
            }
            let p_plus = 0.5 * (1.0 + term.string.expectation(state));
            let plus = (0..self.shots).filter(|_| self.rng.random::<f64>() < p_plus).count();
            let mean = (2.0 * plus as f64 - self.shots as f64) / self.shots as f64;
            total += term.coefficient.re * mean;
        }
        Ok(total)
    }
}
