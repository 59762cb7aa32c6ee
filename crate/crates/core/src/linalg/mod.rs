//! Dense linear algebra for the Newton systems: direct solves, condition
//! numbers, incomplete LU preconditioning and the embedding handed to the
//! quantum solvers.

mod embed;
mod ilu;
mod ordering;
mod precond;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use embed::{padded_embedding, quantum_embedding, EmbeddedSystem, Embedding};
pub use ilu::{ilu0_factorize, ilu0_with_shift_fallback, iluk_factorize, IluFactors, Pattern};
pub use ordering::{max_product_matching, reverse_cuthill_mckee};
pub use precond::{apply_left_preconditioning, build_preconditioner, Preconditioner, Preconditioning};

use crate::{Error, Result};

/// Block sizes of a Newton system `(ΔX, ΔZ, Δλ, Δμ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KktBlocks {
    pub nx: usize,
    pub ni: usize,
    pub ne: usize,
}

impl KktBlocks {
    pub fn dim(&self) -> usize {
        self.nx + 2 * self.ni + self.ne
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub blocks: Option<KktBlocks>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, right-hand side has {} entries",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear system entries".into()));
        }
        Ok(LinearSystem { a, b, blocks: None })
    }

    pub fn with_blocks(mut self, blocks: KktBlocks) -> Self {
        debug_assert_eq!(blocks.dim(), self.dim());
        self.blocks = Some(blocks);
        self
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `‖Ax − b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        let r = (&self.a * x - &self.b).norm();
        let nb = self.b.norm();
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }
}

/// Backend-specific details of one solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub backend: String,
    /// Fill level of the incomplete factorization, when preconditioned.
    pub fill_level: Option<usize>,
    /// Diagonal shifts applied to rescue a failed factorization.
    pub diagonal_shifts: Vec<f64>,
    /// Quantum solves spent on refinement after the first.
    pub refinement_rounds: usize,
    pub quantum_solves: usize,
    pub optimizer_iterations: usize,
    pub restarts: usize,
    pub layers: Option<usize>,
    pub final_cost: Option<f64>,
    pub pauli_terms: Option<usize>,
    pub post_selection_probability: Option<f64>,
    pub clock_qubits: Option<usize>,
    pub qubits: Option<usize>,
    /// Set when the backend could not reach its declared tolerance.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: DVector<f64>,
    pub relative_residual: f64,
    pub kappa_raw: Option<f64>,
    pub kappa_precond: Option<f64>,
    pub diagnostics: SolveDiagnostics,
}

/// LU with partial pivoting.
pub fn direct_solve(system: &LinearSystem) -> Result<SolveReport> {
    let x = lu_solve(&system.a, &system.b)?;
    Ok(SolveReport {
        relative_residual: system.relative_residual(&x),
        x,
        kappa_raw: None,
        kappa_precond: None,
        diagnostics: SolveDiagnostics { backend: "direct".into(), ..Default::default() },
    })
}

pub(crate) fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    if hi == 0.0 || lo <= f64::EPSILON * hi * 1e-3 {
        return Err(Error::Singular);
    }
    let x = lu.solve(b).ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Spectral condition number `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}
