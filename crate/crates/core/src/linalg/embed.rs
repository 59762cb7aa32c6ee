use nalgebra::{DMatrix, DVector};

use super::{spectral_norm, LinearSystem};

/// How an `n×n` real system was turned into a `2^q`-dimensional one with
/// `‖A_q‖₂ = 1` and `‖b_q‖₂ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub original_dim: usize,
    /// Dimension after padding to a power of two, before any dilation.
    pub padded_dim: usize,
    /// Whether the Hermitian dilation `[[0, A], [Aᵀ, 0]]` was applied.
    pub dilated: bool,
    /// `A_q = A_pad / a_scale`.
    pub a_scale: f64,
    /// `b_q = b_pad / b_scale`.
    pub b_scale: f64,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        if self.dilated {
            2 * self.padded_dim
        } else {
            self.padded_dim
        }
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Map a solution of the original system to the solution of the
    /// embedded one.
    pub fn embed_solution(&self, x: &DVector<f64>) -> DVector<f64> {
        let factor = self.a_scale / self.b_scale;
        let offset = if self.dilated { self.padded_dim } else { 0 };
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.original_dim {
            out[offset + i] = x[i] * factor;
        }
        out
    }

    /// Inverse of [`Embedding::embed_solution`]: reads the block holding the
    /// solution and undoes the scaling.
    pub fn recover(&self, xq: &DVector<f64>) -> DVector<f64> {
        let factor = self.b_scale / self.a_scale;
        let offset = if self.dilated { self.padded_dim } else { 0 };
        DVector::from_fn(self.original_dim, |i, _| xq[offset + i] * factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub embedding: Embedding,
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let tol = 1e-14 * a.amax();
    (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol))
}

fn pad(system: &LinearSystem) -> (DMatrix<f64>, DVector<f64>, f64) {
    let n = system.dim();
    let m = n.next_power_of_two().max(2);
    let norm = spectral_norm(&system.a);
    // pad with ‖A‖₂ so the extra eigenvalues sit at 1 after scaling
    let fill = if norm > 0.0 { norm } else { 1.0 };
    let mut a = DMatrix::zeros(m, m);
    a.view_mut((0, 0), (n, n)).copy_from(&system.a);
    for i in n..m {
        a[(i, i)] = fill;
    }
    let mut b = DVector::zeros(m);
    b.rows_mut(0, n).copy_from(&system.b);
    (a, b, fill)
}

fn finish(
    a: DMatrix<f64>,
    b: DVector<f64>,
    original_dim: usize,
    padded_dim: usize,
    dilated: bool,
    a_scale: f64,
) -> EmbeddedSystem {
    let b_scale = b.norm();
    let b_scale = if b_scale > 0.0 { b_scale } else { 1.0 };
    EmbeddedSystem {
        a: a / a_scale,
        b: b / b_scale,
        embedding: Embedding { original_dim, padded_dim, dilated, a_scale, b_scale },
    }
}

/// Hermitian embedding for HHL: pad to a power of two (at least one qubit),
/// dilate if the padded matrix is not symmetric, and normalize.
pub fn quantum_embedding(system: &LinearSystem) -> EmbeddedSystem {
    let n = system.dim();
    let (a, b, a_scale) = pad(system);
    let m = a.nrows();
    if is_symmetric(&a) {
        return finish(a, b, n, m, false, a_scale);
    }
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    d.view_mut((0, m), (m, m)).copy_from(&a);
    d.view_mut((m, 0), (m, m)).copy_from(&a.transpose());
    let mut db = DVector::zeros(2 * m);
    db.rows_mut(0, m).copy_from(&b);
    finish(d, db, n, m, true, a_scale)
}

/// Padding and normalization only, for solvers that accept a general
/// (non-Hermitian) matrix.
pub fn padded_embedding(system: &LinearSystem) -> EmbeddedSystem {
    let n = system.dim();
    let (a, b, a_scale) = pad(system);
    let m = a.nrows();
    finish(a, b, n, m, false, a_scale)
}
