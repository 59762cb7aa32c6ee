/// One contribution to a real/reactive power expression in polar form:
///
/// ```text
/// p = Va² gs + Va Vb (gm cos φ + bm sin φ)
/// q = -Va² bs + Va Vb (gm sin φ - bm cos φ),   φ = θa - θb
/// ```
///
/// A bus injection is a self term plus one cross term per neighbour; a
/// branch-end flow is a single term carrying both parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub a: usize,
    pub b: usize,
    pub gs: f64,
    pub bs: f64,
    pub gm: f64,
    pub bm: f64,
}

/// Value, gradient and Hessian of a term over the local variables
/// `(θa, θb, Va, Vb)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalDerivatives {
    pub p: f64,
    pub q: f64,
    pub dp: [f64; 4],
    pub dq: [f64; 4],
    pub hp: [[f64; 4]; 4],
    pub hq: [[f64; 4]; 4],
}

const TA: usize = 0;
const TB: usize = 1;
const VA: usize = 2;
const VB: usize = 3;

impl PowerTerm {
    pub fn self_term(a: usize, gs: f64, bs: f64) -> Self {
        PowerTerm { a, b: a, gs, bs, gm: 0.0, bm: 0.0 }
    }

    pub fn cross_term(a: usize, b: usize, gm: f64, bm: f64) -> Self {
        PowerTerm { a, b, gs: 0.0, bs: 0.0, gm, bm }
    }

    /// Global positions of the local variables.
    pub fn indices(&self, theta_offset: usize, v_offset: usize) -> [usize; 4] {
        [theta_offset + self.a, theta_offset + self.b, v_offset + self.a, v_offset + self.b]
    }

    pub fn value(&self, theta: &[f64], v: &[f64]) -> (f64, f64) {
        let va = v[self.a];
        let mut p = va * va * self.gs;
        let mut q = -va * va * self.bs;
        if self.a != self.b {
            let s = va * v[self.b];
            let (sin, cos) = (theta[self.a] - theta[self.b]).sin_cos();
            p += s * (self.gm * cos + self.bm * sin);
            q += s * (self.gm * sin - self.bm * cos);
        }
        (p, q)
    }

    pub fn derivatives(&self, theta: &[f64], v: &[f64]) -> LocalDerivatives {
        let va = v[self.a];
        let mut d = LocalDerivatives { p: va * va * self.gs, q: -va * va * self.bs, ..Default::default() };
        d.dp[VA] = 2.0 * va * self.gs;
        d.dq[VA] = -2.0 * va * self.bs;
        d.hp[VA][VA] = 2.0 * self.gs;
        d.hq[VA][VA] = -2.0 * self.bs;
        if self.a == self.b {
            return d;
        }

        let vb = v[self.b];
        let s = va * vb;
        let (sin, cos) = (theta[self.a] - theta[self.b]).sin_cos();
        // u and w rotate into each other under d/dφ: u' = -w, w' = u
        let u = self.gm * cos + self.bm * sin;
        let w = self.gm * sin - self.bm * cos;

        d.p += s * u;
        d.q += s * w;

        d.dp[TA] = -s * w;
        d.dp[TB] = s * w;
        d.dp[VA] += vb * u;
        d.dp[VB] = va * u;
        d.dq[TA] = s * u;
        d.dq[TB] = -s * u;
        d.dq[VA] += vb * w;
        d.dq[VB] = va * w;

        let sym = |h: &mut [[f64; 4]; 4], i: usize, j: usize, val: f64| {
            h[i][j] += val;
            if i != j {
                h[j][i] += val;
            }
        };
        let hp = &mut d.hp;
        sym(hp, TA, TA, -s * u);
        sym(hp, TA, TB, s * u);
        sym(hp, TB, TB, -s * u);
        sym(hp, TA, VA, -vb * w);
        sym(hp, TA, VB, -va * w);
        sym(hp, TB, VA, vb * w);
        sym(hp, TB, VB, va * w);
        sym(hp, VA, VB, u);

        let hq = &mut d.hq;
        sym(hq, TA, TA, -s * w);
        sym(hq, TA, TB, s * w);
        sym(hq, TB, TB, -s * w);
        sym(hq, TA, VA, vb * u);
        sym(hq, TA, VB, va * u);
        sym(hq, TB, VA, -vb * u);
        sym(hq, TB, VB, -va * u);
        sym(hq, VA, VB, w);
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(term: PowerTerm) {
        let theta = [0.3, -0.2];
        let v = [1.04, 0.97];
        let d = term.derivatives(&theta, &v);
        let (p, q) = term.value(&theta, &v);
        assert!((p - d.p).abs() < 1e-14 && (q - d.q).abs() < 1e-14);

        let h = 1e-6;
        let shift = |k: usize, delta: f64| {
            let mut t = theta;
            let mut vv = v;
            match k {
                0 => t[term.a] += delta,
                1 => t[term.b] += delta,
                2 => vv[term.a] += delta,
                _ => vv[term.b] += delta,
            }
            (t, vv)
        };
        let cols = if term.a == term.b { vec![2] } else { vec![0, 1, 2, 3] };
        for &k in &cols {
            let (tp, vp) = shift(k, h);
            let (tm, vm) = shift(k, -h);
            let (pp, qp) = term.value(&tp, &vp);
            let (pm, qm) = term.value(&tm, &vm);
            assert!(((pp - pm) / (2.0 * h) - d.dp[k]).abs() < 1e-8, "dp[{k}]");
            assert!(((qp - qm) / (2.0 * h) - d.dq[k]).abs() < 1e-8, "dq[{k}]");
            let dp_p = term.derivatives(&tp, &vp);
            let dp_m = term.derivatives(&tm, &vm);
            for &j in &cols {
                let fp = (dp_p.dp[j] - dp_m.dp[j]) / (2.0 * h);
                let fq = (dp_p.dq[j] - dp_m.dq[j]) / (2.0 * h);
                assert!((fp - d.hp[k][j]).abs() < 1e-7, "hp[{k}][{j}]");
                assert!((fq - d.hq[k][j]).abs() < 1e-7, "hq[{k}][{j}]");
            }
        }
    }

    #[test]
    fn cross_term_derivatives_match_finite_differences() {
        fd_check(PowerTerm { a: 0, b: 1, gs: 1.3, bs: -4.1, gm: -1.2, bm: 3.7 });
    }

    #[test]
    fn self_term_derivatives_match_finite_differences() {
        fd_check(PowerTerm::self_term(1, 0.4, -2.0));
    }
}
