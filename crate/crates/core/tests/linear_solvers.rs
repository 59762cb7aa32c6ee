use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qopf_core::backend::{ClassicalBackend, LinearBackend};
use qopf_core::ipm::{solve, SolverOptions};
use qopf_core::linalg::{
    apply_left_preconditioning, build_preconditioner, condition_number, direct_solve, ilu0_factorize,
    ilu0_with_shift_fallback, iluk_factorize, max_product_matching, padded_embedding, quantum_embedding,
    reverse_cuthill_mckee, LinearSystem, Pattern, Preconditioning, SolveReport,
};
use qopf_core::network::{bundled_case, bundled_case_names};
use qopf_core::opf::build_dc_problem;
use qopf_core::Result;

/// Classical solver that keeps a copy of every Newton system.
#[derive(Default)]
struct Recorder {
    inner: ClassicalBackend,
    systems: Vec<LinearSystem>,
}

impl LinearBackend for Recorder {
    fn name(&self) -> &str {
        "recorder"
    }

    fn solve(&mut self, system: &LinearSystem) -> Result<SolveReport> {
        self.systems.push(system.clone());
        self.inner.solve(system)
    }
}

fn bundled_dc_systems() -> Vec<(String, LinearSystem)> {
    let mut out = Vec::new();
    for name in bundled_case_names() {
        let problem = build_dc_problem(&bundled_case(name).unwrap()).unwrap();
        let mut rec = Recorder::default();
        solve(&problem, &SolverOptions::default(), &mut rec).unwrap();
        out.extend(rec.systems.into_iter().map(|s| (name.to_string(), s)));
    }
    out
}

/// Row matching and RCM ordering used ahead of the incomplete factorization.
fn ordered(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let rows = max_product_matching(a).unwrap_or_else(|| (0..n).collect());
    let matched = DMatrix::from_fn(n, n, |i, j| a[(rows[i], j)]);
    let perm = reverse_cuthill_mckee(&matched);
    DMatrix::from_fn(n, n, |i, j| matched[(perm[i], perm[j])])
}

fn assert_ilu0_property(a: &DMatrix<f64>) {
    let f = ilu0_with_shift_fallback(a).unwrap();
    let lu = f.product();
    let pattern = Pattern::of(a);
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let target = a[(i, j)] + if i == j { f.shift } else { 0.0 };
            if pattern.contains(i, j) {
                assert!((lu[(i, j)] - target).abs() <= 1e-10 * scale, "({i},{j}): {} vs {target}", lu[(i, j)]);
            } else {
                assert_eq!(f.l[(i, j)], 0.0);
                assert_eq!(f.u[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn bundled_kkt_matrices() {
    let systems = bundled_dc_systems();
    assert!(systems.len() >= 20);
    let mut improved = 0;
    for (name, sys) in &systems {
        assert_ilu0_property(&ordered(&sys.a));

        // preconditioning changes the operator, not the solution
        let raw = direct_solve(sys).unwrap().x;
        let kappa_raw = condition_number(&sys.a);
        let (m, pre, kappa_pre) = build_preconditioner(sys, Preconditioning::default(), kappa_raw).unwrap().unwrap();
        let x = direct_solve(&pre).unwrap().x;
        assert!((&x - &raw).norm() <= 1e-8 * raw.norm().max(1.0), "{name}");
        assert!(m.factors.fill_level <= 8);
        if kappa_pre <= kappa_raw {
            improved += 1;
        }
    }
    assert!(improved * 10 >= systems.len() * 9, "{improved} of {}", systems.len());
}

#[test]
fn natural_order_zero_fill_needs_a_shift_on_kkt_systems() {
    // the slack rows have zero diagonal entries until rows are matched
    let (_, sys) = bundled_dc_systems().remove(0);
    assert!(ilu0_factorize(&sys.a, &Pattern::of(&sys.a)).is_err());
    let shifted = ilu0_with_shift_fallback(&sys.a).unwrap();
    assert!(shifted.shift > 0.0);
    let matched = ilu0_with_shift_fallback(&ordered(&sys.a)).unwrap();
    assert_eq!(matched.shift, 0.0);
}

#[test]
fn embeddings_round_trip_kkt_solutions() {
    let (_, sys) = bundled_dc_systems().remove(0);
    let x = direct_solve(&sys).unwrap().x;
    for e in [quantum_embedding(&sys), padded_embedding(&sys)] {
        assert!(e.a.nrows().is_power_of_two());
        assert!((e.b.norm() - 1.0).abs() < 1e-12);
        assert!(e.a.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let xq = e.embedding.embed_solution(&x);
        assert!((&e.a * &xq - &e.b).norm() < 1e-8);
        assert!((e.embedding.recover(&xq) - &x).norm() < 1e-12 * x.norm());
    }
    let hermitian = quantum_embedding(&sys);
    assert_eq!(hermitian.embedding.dilated, sys.a != sys.a.transpose());
    assert_eq!(hermitian.a, hermitian.a.transpose());
}

#[test]
fn ilu0_of_small_example() {
    // tridiagonal: ILU(0) is exact because LU creates no fill
    let a = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0]);
    let f = ilu0_factorize(&a, &Pattern::of(&a)).unwrap();
    assert!((f.product() - &a).amax() < 1e-15);
    assert!((f.l[(1, 0)] + 0.25).abs() < 1e-15);
    assert!((f.u[(1, 1)] - 3.75).abs() < 1e-15);
}

fn sparse_dominant(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(-1.0..1.0f64, n * n), prop::collection::vec(any::<bool>(), n * n)).prop_map(
        move |(v, keep)| {
            let mut a = DMatrix::from_fn(n, n, |i, j| if keep[i * n + j] { v[i * n + j] } else { 0.0 });
            for i in 0..n {
                a[(i, i)] = n as f64 + 1.0;
            }
            a
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ilu0_matches_on_pattern(a in (2usize..9).prop_flat_map(sparse_dominant)) {
        assert_ilu0_property(&a);
    }

    #[test]
    fn full_fill_is_exact_lu(a in (2usize..8).prop_flat_map(sparse_dominant)) {
        let n = a.nrows();
        let f = iluk_factorize(&a, n).unwrap();
        prop_assert!((f.product() - &a).amax() < 1e-12);
    }

    #[test]
    fn left_preconditioning_preserves_solutions(a in (2usize..8).prop_flat_map(sparse_dominant), seed in any::<u64>()) {
        let n = a.nrows();
        let b = DVector::from_fn(n, |i, _| ((seed >> (i % 60)) & 7) as f64 - 3.5);
        let sys = LinearSystem::new(a, b).unwrap();
        let raw = direct_solve(&sys).unwrap().x;
        for policy in [Preconditioning::Ilu0, Preconditioning::default()] {
            let (m, _, _) = build_preconditioner(&sys, policy, f64::INFINITY).unwrap().unwrap();
            let pre = apply_left_preconditioning(&sys, &m).unwrap();
            let x = direct_solve(&pre).unwrap().x;
            prop_assert!((&x - &raw).norm() <= 1e-8 * raw.norm().max(1.0));
        }
    }
}
