use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Sparsity pattern of a square matrix. The diagonal is always included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    mask: Vec<bool>,
}

impl Pattern {
    /// Exact nonzeros of `a` plus the diagonal.
    pub fn of(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                mask[i * n + j] = i == j || a[(i, j)] != 0.0;
            }
        }
        Pattern { n, mask }
    }

    pub fn full(n: usize) -> Self {
        Pattern { n, mask: vec![true; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn nnz(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Incomplete factors `L` (unit lower triangular, diagonal not stored) and
/// `U` (upper triangular) with `LU ≈ A + shift·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct IluFactors {
    pub l: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Level of fill admitted; 0 means the pattern of `A` only.
    pub fill_level: usize,
    /// Diagonal shift added before factorizing.
    pub shift: f64,
}

impl IluFactors {
    /// The product `LU` with the unit diagonal of `L` restored.
    pub fn product(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        let l = &self.l + DMatrix::identity(n, n);
        l * &self.u
    }

    /// Solve `LU y = v` by forward and back substitution.
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let n = v.len();
        let mut y = v.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.u[(i, k)] * y[k];
            }
            let d = self.u[(i, i)];
            if d == 0.0 {
                return Err(Error::ZeroPivot { row: i });
            }
            y[i] = s / d;
        }
        Ok(y)
    }
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// ILU(0) restricted to `pattern`.
pub fn ilu0_factorize(a: &DMatrix<f64>, pattern: &Pattern) -> Result<IluFactors> {
    factorize(a, Some(pattern), 0, 0.0)
}

/// Level-of-fill ILU(k) on the pattern of `a`. Fill entries are admitted up
/// to level `k`; for `k >= n - 1` this is the complete LU without pivoting.
pub fn iluk_factorize(a: &DMatrix<f64>, k: usize) -> Result<IluFactors> {
    factorize(a, None, k, 0.0)
}

/// ILU(0) retried with diagonal shifts `δ = 1e-8·‖A‖∞`, growing by 100×,
/// at most three times after a zero pivot.
pub fn ilu0_with_shift_fallback(a: &DMatrix<f64>) -> Result<IluFactors> {
    with_shift_fallback(a, 0)
}

pub(crate) fn with_shift_fallback(a: &DMatrix<f64>, level: usize) -> Result<IluFactors> {
    let pattern = Pattern::of(a);
    let mut delta = 1e-8 * inf_norm(a);
    let mut err = match factorize(a, Some(&pattern), level, 0.0) {
        Ok(f) => return Ok(f),
        Err(e) => e,
    };
    for _ in 0..3 {
        match factorize(a, Some(&pattern), level, delta) {
            Ok(f) => {
                log::debug!("incomplete factorization needed diagonal shift {delta:e}");
                return Ok(f);
            }
            Err(e) => err = e,
        }
        delta *= 100.0;
    }
    Err(err)
}

fn factorize(a: &DMatrix<f64>, pattern: Option<&Pattern>, max_level: usize, shift: f64) -> Result<IluFactors> {
    let n = a.nrows();
    let owned;
    let pattern = match pattern {
        Some(p) => p,
        None => {
            owned = Pattern::of(a);
            &owned
        }
    };
    const DROPPED: usize = usize::MAX;
    let tiny = f64::EPSILON * inf_norm(a).max(shift.abs());

    let mut w = a.clone();
    for i in 0..n {
        w[(i, i)] += shift;
    }
    let mut level = vec![DROPPED; n * n];
    for i in 0..n {
        for j in 0..n {
            if pattern.contains(i, j) {
                level[i * n + j] = 0;
            }
        }
    }

    for i in 0..n {
        for k in 0..i {
            let lik = level[i * n + k];
            if lik > max_level {
                continue;
            }
            let pivot = w[(k, k)];
            let factor = w[(i, k)] / pivot;
            w[(i, k)] = factor;
            if factor == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let lkj = level[k * n + j];
                if lkj > max_level {
                    continue;
                }
                let fill = lik.saturating_add(lkj).saturating_add(1);
                let current = &mut level[i * n + j];
                if *current > max_level {
                    // position is structurally empty so far
                    if fill > max_level {
                        continue;
                    }
                    *current = fill;
                    w[(i, j)] = 0.0;
                } else if fill < *current {
                    *current = fill;
                }
                w[(i, j)] -= factor * w[(k, j)];
            }
        }
        if w[(i, i)].abs() <= tiny {
            return Err(Error::ZeroPivot { row: i });
        }
        for j in 0..n {
            if level[i * n + j] > max_level {
                w[(i, j)] = 0.0;
            }
        }
    }

    let l = DMatrix::from_fn(n, n, |i, j| if j < i { w[(i, j)] } else { 0.0 });
    let u = DMatrix::from_fn(n, n, |i, j| if j >= i { w[(i, j)] } else { 0.0 });
    Ok(IluFactors { l, u, fill_level: max_level, shift })
}
