use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ilu::{with_shift_fallback, IluFactors};
use super::ordering::{max_product_matching, reverse_cuthill_mckee};
use super::{condition_number, LinearSystem};
use crate::{Error, Result};

/// How a Newton system is preconditioned before a quantum solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preconditioning {
    None,
    /// ILU(0) in the natural ordering, with diagonal-shift fallback.
    Ilu0,
    /// Incomplete LU after a max-product row matching and a reverse
    /// Cuthill-McKee reordering, raising the fill level from 0 until the
    /// preconditioned condition number is at most `kappa_target` (and no
    /// worse than the raw one), or `max_level` is reached.
    Ilu {
        max_level: usize,
        kappa_target: f64,
    },
}

impl Default for Preconditioning {
    fn default() -> Self {
        Preconditioning::Ilu { max_level: 8, kappa_target: 100.0 }
    }
}

impl std::fmt::Display for Preconditioning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Preconditioning::None => f.write_str("none"),
            Preconditioning::Ilu0 => f.write_str("ilu0"),
            Preconditioning::Ilu { .. } => f.write_str("ilu"),
        }
    }
}

impl std::str::FromStr for Preconditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Preconditioning::None),
            "ilu0" => Ok(Preconditioning::Ilu0),
            "ilu" => Ok(Preconditioning::default()),
            _ => Err(Error::InvalidOption(format!("unknown preconditioning `{s}`"))),
        }
    }
}

/// `M = P_rᵀ Qᵀ L U Q` where `P_r` is the row matching and `Q` the
/// symmetric reordering; both are the identity in the natural ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    /// Row `i` of the matched matrix is row `row_perm[i]` of `A`.
    pub row_perm: Vec<usize>,
    /// Index `i` of the reordered matrix is index `sym_perm[i]` before it.
    pub sym_perm: Vec<usize>,
    pub factors: IluFactors,
}

impl Preconditioner {
    pub fn identity_ordering(factors: IluFactors) -> Self {
        let n = factors.l.nrows();
        Preconditioner { row_perm: (0..n).collect(), sym_perm: (0..n).collect(), factors }
    }

    pub fn dim(&self) -> usize {
        self.row_perm.len()
    }

    /// The matrix that was actually factorized.
    pub fn reordered(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| a[(self.row_perm[self.sym_perm[i]], self.sym_perm[j])])
    }

    /// `M⁻¹ v`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        let w = DVector::from_fn(n, |i, _| v[self.row_perm[self.sym_perm[i]]]);
        let z = self.factors.solve(&w)?;
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.sym_perm[i]] = z[i];
        }
        Ok(x)
    }
}

/// `(M⁻¹A, M⁻¹b)`, one triangular solve per column.
pub fn apply_left_preconditioning(system: &LinearSystem, m: &Preconditioner) -> Result<LinearSystem> {
    let n = system.dim();
    if m.dim() != n {
        return Err(Error::Dimension(format!("preconditioner is {}x{}, system is {n}x{n}", m.dim(), m.dim())));
    }
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = m.apply(&system.a.column(j).into_owned())?;
        a.set_column(j, &col);
    }
    let b = m.apply(&system.b)?;
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("preconditioned system".into()));
    }
    Ok(LinearSystem { a, b, blocks: system.blocks })
}

/// Preconditioner chosen by `policy`, together with the preconditioned
/// system and its condition number. `kappa_raw` bounds the adaptive
/// search. Returns `None` for [`Preconditioning::None`].
pub fn build_preconditioner(
    system: &LinearSystem,
    policy: Preconditioning,
    kappa_raw: f64,
) -> Result<Option<(Preconditioner, LinearSystem, f64)>> {
    match policy {
        Preconditioning::None => Ok(None),
        Preconditioning::Ilu0 => {
            let m = Preconditioner::identity_ordering(with_shift_fallback(&system.a, 0)?);
            let pre = apply_left_preconditioning(system, &m)?;
            let kappa = condition_number(&pre.a);
            Ok(Some((m, pre, kappa)))
        }
        Preconditioning::Ilu { max_level, kappa_target } => {
            let n = system.dim();
            let row_perm = max_product_matching(&system.a).unwrap_or_else(|| (0..n).collect());
            let matched = DMatrix::from_fn(n, n, |i, j| system.a[(row_perm[i], j)]);
            let sym_perm = reverse_cuthill_mckee(&matched);
            let reordered = DMatrix::from_fn(n, n, |i, j| matched[(sym_perm[i], sym_perm[j])]);

            let mut best: Option<(Preconditioner, LinearSystem, f64)> = None;
            let mut last_err = None;
            for level in 0..=max_level {
                let factors = match with_shift_fallback(&reordered, level) {
                    Ok(f) => f,
                    Err(e) => {
                        last_err = Some(e);
                        continue;
                    }
                };
                let m = Preconditioner { row_perm: row_perm.clone(), sym_perm: sym_perm.clone(), factors };
                let pre = match apply_left_preconditioning(system, &m) {
                    Ok(p) => p,
                    Err(e) => {
                        last_err = Some(e);
                        continue;
                    }
                };
                let kappa = condition_number(&pre.a);
                let good = kappa <= kappa_target && kappa <= kappa_raw;
                if best.as_ref().is_none_or(|b| kappa < b.2) {
                    best = Some((m, pre, kappa));
                }
                if good {
                    break;
                }
            }
            match best {
                Some(b) => Ok(Some(b)),
                None => Err(last_err.unwrap_or(Error::Singular)),
            }
        }
    }
}
