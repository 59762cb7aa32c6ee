use nalgebra::{DMatrix, DVector};

use super::{Evaluation, IterateState};
use crate::linalg::{KktBlocks, LinearSystem};
use crate::{Error, Result};

/// Linearized KKT system over the unknowns `(ΔX, ΔZ, Δλ, Δμ)`:
///
/// ```text
/// [ ∇²L   0        ∇Hᵀ  ∇Gᵀ ] [ΔX]     [ ∇L      ]
/// [ 0     diag(μ/Z) 0    I   ] [ΔZ] = − [ μ − γ/Z ]
/// [ ∇H    0        0    0   ] [Δλ]     [ H       ]
/// [ ∇G    I        0    0   ] [Δμ]     [ G + Z   ]
/// ```
///
/// `∇H` and `∇G` are the constraint Jacobians (one row per constraint).
pub fn assemble_kkt(eval: &Evaluation, hessian: &DMatrix<f64>, state: &IterateState) -> Result<LinearSystem> {
    let nx = state.x.len();
    let ni = state.z.len();
    let ne = state.lambda.len();
    let blocks = KktBlocks { nx, ni, ne };
    let n = blocks.dim();
    let (oz, ol, om) = (nx, nx + ni, nx + ni + ne);

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (nx, nx)).copy_from(hessian);
    a.view_mut((0, ol), (nx, ne)).copy_from(&eval.dh.transpose());
    a.view_mut((0, om), (nx, ni)).copy_from(&eval.dg.transpose());
    a.view_mut((ol, 0), (ne, nx)).copy_from(&eval.dh);
    a.view_mut((om, 0), (ni, nx)).copy_from(&eval.dg);
    for m in 0..ni {
        a[(oz + m, oz + m)] = state.mu[m] / state.z[m];
        a[(oz + m, om + m)] = 1.0;
        a[(om + m, oz + m)] = 1.0;
    }

    let grad = eval.lagrangian_gradient(state);
    let mut b = DVector::zeros(n);
    b.rows_mut(0, nx).copy_from(&(-grad));
    for m in 0..ni {
        b[oz + m] = -(state.mu[m] - state.gamma / state.z[m]);
        b[om + m] = -(eval.g[m] + state.z[m]);
    }
    b.rows_mut(ol, ne).copy_from(&(-&eval.h));

    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("KKT system".into()));
    }
    Ok(LinearSystem { a, b, blocks: Some(blocks) })
}
