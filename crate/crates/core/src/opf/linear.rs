use nalgebra::{DMatrix, DVector};

/// Bounds at or beyond this magnitude are treated as absent.
pub(crate) const INFINITE_BOUND: f64 = 1e10;

/// Affine rows `a x + c`, built incrementally.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRows {
    nx: usize,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl LinearRows {
    pub fn new(nx: usize) -> Self {
        LinearRows { nx, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, coeffs: Vec<(usize, f64)>, constant: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.nx));
        self.rows.push((coeffs, constant));
    }

    pub fn eval_into(&self, x: &DVector<f64>, out: &mut [f64]) {
        for (o, (coeffs, c)) in out.iter_mut().zip(&self.rows) {
            *o = coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + c;
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        self.eval_into(x, out.as_mut_slice());
        out
    }

    /// Write the coefficient rows into `jac` starting at row `offset`.
    pub fn jacobian_into(&self, jac: &mut DMatrix<f64>, offset: usize) {
        for (i, (coeffs, _)) in self.rows.iter().enumerate() {
            for &(j, a) in coeffs {
                jac[(offset + i, j)] += a;
            }
        }
    }

    pub fn jacobian(&self) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.len(), self.nx);
        self.jacobian_into(&mut jac, 0);
        jac
    }
}

/// Split a box `lo <= x_j <= hi` into single-sided rows. A degenerate box
/// becomes an equality row instead, since it has no interior.
pub(crate) fn push_bounds(eq: &mut LinearRows, ineq: &mut LinearRows, j: usize, lo: f64, hi: f64) {
    let has_lo = lo > -INFINITE_BOUND;
    let has_hi = hi < INFINITE_BOUND;
    if has_lo && has_hi && (hi - lo).abs() <= 1e-10 * hi.abs().max(1.0) {
        eq.push(vec![(j, 1.0)], -hi);
        return;
    }
    if has_hi {
        ineq.push(vec![(j, 1.0)], -hi);
    }
    if has_lo {
        ineq.push(vec![(j, -1.0)], lo);
    }
}
