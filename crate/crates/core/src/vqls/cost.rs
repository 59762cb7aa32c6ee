use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use super::Ansatz;
use crate::quantum::{Gate, PauliDecomposition, StateVector, C64};
use crate::{Error, Result};

/// Below this `‖Aψ‖²` the ansatz state is (numerically) in the kernel of `A`.
const MIN_IMAGE_NORM: f64 = 1e-14;

/// `H_G = A†(I − |b⟩⟨b|)A` together with `A†A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub h_g: DMatrix<C64>,
    pub ata: DMatrix<C64>,
}

impl EffectiveHamiltonian {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let norm = b.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        let ac = a.map(|v| C64::new(v, 0.0));
        let bc = b.map(|v| C64::new(v, 0.0));
        let ata = ac.adjoint() * &ac;
        let ab = ac.adjoint() * &bc;
        let h_g = &ata - &ab * ab.adjoint();
        Ok(EffectiveHamiltonian { h_g, ata })
    }

    /// `⟨ψ|H_G|ψ⟩ / ⟨ψ|A†A|ψ⟩`.
    pub fn cost(&self, state: &StateVector) -> Result<f64> {
        let psi = state.to_vector();
        let den = (psi.adjoint() * &self.ata * &psi)[(0, 0)].re;
        if den < MIN_IMAGE_NORM {
            return Err(Error::Singular);
        }
        Ok((psi.adjoint() * &self.h_g * &psi)[(0, 0)].re / den)
    }
}

/// The normalized global cost `1 − |⟨b|Aψ⟩|²/‖Aψ‖²` of an ansatz.
#[derive(Debug, Clone)]
pub struct VqlsCost {
    pub ansatz: Ansatz,
    a: DMatrix<C64>,
    b: DVector<C64>,
}

/// Pieces of one cost evaluation.
#[derive(Debug, Clone)]
struct Evaluation {
    cost: f64,
    /// `Aψ`
    image: DVector<C64>,
    /// `⟨b|Aψ⟩`
    overlap: C64,
    /// `‖Aψ‖²`
    norm_sq: f64,
}

impl VqlsCost {
    pub fn new(ansatz: Ansatz, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let dim = 1 << ansatz.qubits;
        if a.nrows() != dim || a.ncols() != dim || b.len() != dim {
            return Err(Error::Dimension(format!(
                "{}-qubit ansatz for a {}×{} system",
                ansatz.qubits,
                a.nrows(),
                a.ncols()
            )));
        }
        let norm = b.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(VqlsCost { ansatz, a: a.map(|v| C64::new(v, 0.0)), b: b.map(|v| C64::new(v, 0.0)) })
    }

    fn evaluate_state(&self, state: &StateVector) -> Result<Evaluation> {
        let image = &self.a * state.to_vector();
        let norm_sq = image.norm_squared();
        if norm_sq < MIN_IMAGE_NORM {
            return Err(Error::Singular);
        }
        let overlap = self.b.dotc(&image);
        let cost = (1.0 - overlap.norm_sqr() / norm_sq).clamp(0.0, 1.0);
        Ok(Evaluation { cost, image, overlap, norm_sq })
    }

    pub fn cost(&self, params: &[f64]) -> Result<f64> {
        Ok(self.evaluate_state(&self.ansatz.state(params)?)?.cost)
    }

    /// The cost with `A` applied term by term from its Pauli decomposition.
    pub fn cost_from_pauli(&self, params: &[f64], decomposition: &PauliDecomposition) -> Result<f64> {
        let state = self.ansatz.state(params)?;
        let mut image = DVector::zeros(state.dim());
        for term in &decomposition.terms {
            let applied = term.string.apply(state.amplitudes());
            for (acc, v) in image.iter_mut().zip(applied) {
                *acc += term.coefficient * v;
            }
        }
        let norm_sq = image.norm_squared();
        if norm_sq < MIN_IMAGE_NORM {
            return Err(Error::Singular);
        }
        Ok(1.0 - self.b.dotc(&image).norm_sqr() / norm_sq)
    }

    /// Cost and gradient by one forward and one backward sweep.
    ///
    /// With the cost frozen at its current value `C`, the gradient equals
    /// that of `⟨ψ|O|ψ⟩/‖Aψ‖²` for `O = A†((1 − C)I − |b⟩⟨b|)A`.
    pub fn cost_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let gates = self.ansatz.gates(params)?;
        let mut psi = StateVector::zero(self.ansatz.qubits);
        for (g, _) in &gates {
            psi.apply(g)?;
        }
        let e = self.evaluate_state(&psi)?;
        let weighted = &e.image * C64::new(1.0 - e.cost, 0.0) - &self.b * e.overlap;
        let lambda = self.a.adjoint() * weighted;
        let mut lambda = StateVector::unnormalized(lambda.iter().copied().collect());

        let mut grad = vec![0.0; params.len()];
        for (gate, index) in gates.iter().rev() {
            if let Some(k) = index {
                let mut generated = psi.clone();
                generated.apply(&generator(gate))?;
                grad[*k] = lambda.inner(&generated).im / e.norm_sq;
            }
            let inverse = gate.inverse();
            psi.apply(&inverse)?;
            lambda.apply(&inverse)?;
        }
        Ok((e.cost, grad))
    }

    /// Gradient from ±π/2 shifts of each angle applied to `|⟨b|Aψ⟩|²` and
    /// `‖Aψ‖²` separately.
    pub fn parameter_shift_gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        let base = self.evaluate_state(&self.ansatz.state(params)?)?;
        let mut shifted = params.to_vec();
        let mut grad = vec![0.0; params.len()];
        for k in 0..params.len() {
            let mut parts = [(0.0, 0.0); 2];
            for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
                shifted[k] = params[k] + sign * FRAC_PI_2;
                let image = &self.a * self.ansatz.state(&shifted)?.to_vector();
                parts[slot] = (self.b.dotc(&image).norm_sqr(), image.norm_squared());
            }
            shifted[k] = params[k];
            let d_num = 0.5 * (parts[0].0 - parts[1].0);
            let d_den = 0.5 * (parts[0].1 - parts[1].1);
            grad[k] = (-d_num + (1.0 - base.cost) * d_den) / base.norm_sq;
        }
        Ok(grad)
    }

    /// `x = Re(α ψ)` with `α = ⟨Aψ, b⟩/‖Aψ‖²`, the least-squares fit of
    /// `b` along `Aψ`. Zero when `Aψ ⟂ b`.
    pub fn scaled_solution(&self, params: &[f64]) -> Result<DVector<f64>> {
        let state = self.ansatz.state(params)?;
        let e = self.evaluate_state(&state)?;
        let alpha = e.overlap.conj() / e.norm_sq;
        Ok(state.to_vector().map(|v| (alpha * v).re))
    }
}

/// Pauli generator `G` of a rotation `exp(−iθG/2)`.
fn generator(gate: &Gate) -> Gate {
    match *gate {
        Gate::Rx(q, _) => Gate::X(q),
        Gate::Ry(q, _) => Gate::Y(q),
        Gate::Rz(q, _) => Gate::Z(q),
        _ => unreachable!("only rotations carry angles"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(v);
        let n = v.norm();
        v / n
    }

    #[test]
    fn effective_hamiltonian_of_identity() {
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let h = EffectiveHamiltonian::new(&DMatrix::identity(4, 4), &b).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0])).map(|v| C64::new(v, 0.0));
        assert!((h.h_g - expected).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn identity_cost_is_one_for_orthogonal_state() {
        let ansatz = Ansatz::new(1, 1).unwrap();
        let cost = VqlsCost::new(ansatz, &DMatrix::identity(2, 2), &unit(&[0.0, 1.0])).unwrap();
        // all angles zero leave |0⟩, orthogonal to b
        assert!((cost.cost(&[0.0; 3]).unwrap() - 1.0).abs() < 1e-15);
        // RY(π) maps |0⟩ to |1⟩
        assert!(cost.cost(&[0.0, std::f64::consts::PI, 0.0]).unwrap() < 1e-15);
    }

    #[test]
    fn adjoint_and_shift_gradients_agree_with_differences() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.2, 0.0, 0.4, 0.1, -0.8, 0.3, 0.0, 0.0, 0.5, 0.6, -0.2, 0.3, 0.0, 0.1, 0.9],
        );
        let b = unit(&[1.0, -2.0, 0.5, 0.3]);
        let ansatz = Ansatz::new(2, 2).unwrap();
        let cost = VqlsCost::new(ansatz, &a, &b).unwrap();
        let params: Vec<f64> = (0..ansatz.num_params()).map(|k| 0.37 * k as f64 - 1.1).collect();
        let (c0, adjoint) = cost.cost_and_gradient(&params).unwrap();
        assert!((c0 - cost.cost(&params).unwrap()).abs() < 1e-15);
        let shift = cost.parameter_shift_gradient(&params).unwrap();
        let h = 1e-6;
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            let up = cost.cost(&p).unwrap();
            p[k] -= 2.0 * h;
            let down = cost.cost(&p).unwrap();
            let fd = (up - down) / (2.0 * h);
            assert!((adjoint[k] - fd).abs() < 1e-6, "adjoint {k}: {} vs {fd}", adjoint[k]);
            assert!((shift[k] - fd).abs() < 1e-6, "shift {k}: {} vs {fd}", shift[k]);
        }
    }

    #[test]
    fn scaled_solution_of_exact_state() {
        // A = diag(2, 1), b = |0⟩: ψ = |0⟩ solves up to the factor 1/2
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let cost = VqlsCost::new(Ansatz::new(1, 1).unwrap(), &a, &unit(&[1.0, 0.0])).unwrap();
        // RZ phases only add a global phase to |0⟩, which α absorbs
        let x = cost.scaled_solution(&[0.4, 0.0, -1.3]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        // orthogonal image gives the zero vector
        let x = cost.scaled_solution(&[0.0, std::f64::consts::PI, 0.0]).unwrap();
        assert!(x.amax() < 1e-15);
    }

    #[test]
    fn kernel_state_is_an_error() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let cost = VqlsCost::new(Ansatz::new(1, 1).unwrap(), &a, &unit(&[1.0, 0.0])).unwrap();
        assert!(matches!(cost.cost(&[0.0, std::f64::consts::PI, 0.0]), Err(Error::Singular)));
    }
}
