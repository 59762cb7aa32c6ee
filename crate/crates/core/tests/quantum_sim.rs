use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qopf_core::quantum::{
    expectation, is_hermitian, pauli_decompose, unitary_from_hamiltonian, Circuit, Gate, PauliString, ShotSampler,
    StateVector, C64,
};

fn hermitian(qubits: usize) -> impl Strategy<Value = DMatrix<C64>> {
    let dim = 1usize << qubits;
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), dim * dim).prop_map(move |v| {
        let m = DMatrix::from_fn(dim, dim, |i, j| C64::new(v[i * dim + j].0, v[i * dim + j].1));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    })
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let angle = -PI..PI;
    prop_oneof![
        q.clone().prop_map(Gate::H),
        q.clone().prop_map(Gate::X),
        q.clone().prop_map(Gate::Y),
        q.clone().prop_map(Gate::Z),
        (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::Rx(q, t)),
        (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::Ry(q, t)),
        (q.clone(), angle).prop_map(|(q, t)| Gate::Rz(q, t)),
        (q.clone(), 1..n).prop_map(move |(c, d)| Gate::Cnot { control: c, target: (c + d) % n }),
        (q, 1..n).prop_map(move |(c, d)| Gate::Cz { control: c, target: (c + d) % n }),
    ]
}

fn circuit(n: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate(n), 1..20).prop_map(move |gates| {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g).unwrap();
        }
        c
    })
}

fn random_state(qubits: usize) -> impl Strategy<Value = StateVector> {
    let dim = 1usize << qubits;
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            StateVector::prepare(v.iter().map(|(a, b)| C64::new(a / norm, b / norm)).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pauli_reconstruction(m in (1usize..=3).prop_flat_map(hermitian)) {
        let d = pauli_decompose(&m).unwrap();
        prop_assert!((d.reconstruct() - &m).iter().all(|e| e.norm() <= 1e-10));
        prop_assert!(d.terms.iter().all(|t| t.coefficient.im.abs() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposed_expectation_matches_dense(
        (m, s) in (1usize..=3).prop_flat_map(|q| (hermitian(q), random_state(q)))
    ) {
        let d = pauli_decompose(&m).unwrap();
        let dense = expectation(&s, &m).unwrap();
        prop_assert!((d.expectation(&s).unwrap() - dense).abs() <= 1e-10);
    }

    #[test]
    fn circuit_unitary_agrees_with_simulation(c in (2usize..=4).prop_flat_map(circuit), s in (0usize..16)) {
        let n = c.qubits();
        let u = c.unitary().unwrap();
        prop_assert!((u.adjoint() * &u - DMatrix::identity(1 << n, 1 << n)).iter().all(|e| e.norm() < 1e-12));

        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[s % (1 << n)] = C64::new(1.0, 0.0);
        let mut state = StateVector::prepare(amps).unwrap();
        c.run(&mut state).unwrap();
        let column = u.column(s % (1 << n));
        prop_assert!(state.amplitudes().iter().zip(column.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);

        c.inverse().run(&mut state).unwrap();
        prop_assert!((state.amplitudes()[s % (1 << n)] - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn hamiltonian_exponential_is_unitary(h in (1usize..=2).prop_flat_map(hermitian), t in -3.0..3.0f64) {
        prop_assert!(is_hermitian(&h));
        let u = unitary_from_hamiltonian(&h, t).unwrap();
        let dim = h.nrows();
        prop_assert!((u.adjoint() * &u - DMatrix::identity(dim, dim)).iter().all(|e| e.norm() < 1e-10));
        // U(t)U(−t) = I
        let v = unitary_from_hamiltonian(&h, -t).unwrap();
        prop_assert!((u * v - DMatrix::identity(dim, dim)).iter().all(|e| e.norm() < 1e-10));
    }
}

#[test]
fn bell_state() {
    let mut c = Circuit::new(2);
    c.push(Gate::H(0)).unwrap();
    c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
    let mut s = StateVector::zero(2);
    c.run(&mut s).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [h, 0.0, 0.0, h];
    assert!(s.amplitudes().iter().zip(expected).all(|(a, e)| (a - C64::new(e, 0.0)).norm() < 1e-15));
    assert!((PauliString::parse("ZZ").unwrap().expectation(&s) - 1.0).abs() < 1e-15);
    assert!((PauliString::parse("XX").unwrap().expectation(&s) - 1.0).abs() < 1e-15);
    assert!((PauliString::parse("YY").unwrap().expectation(&s) + 1.0).abs() < 1e-15);
    assert!(PauliString::parse("ZI").unwrap().expectation(&s).abs() < 1e-15);
    assert!((s.probability(0b11, 0b00) - 0.5).abs() < 1e-15);
}

#[test]
fn controlled_unitary_without_control_applies_block() {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).map(|v| C64::new(v, 0.0));
    let mut s = StateVector::zero(3);
    s.apply(&Gate::ControlledUnitary { control: None, targets: vec![2], unitary: x }).unwrap();
    assert!((s.amplitudes()[0b100].re - 1.0).abs() < 1e-15);
}

#[test]
fn sampled_estimates_are_seeded() {
    let mut c = Circuit::new(2);
    c.push(Gate::Ry(0, 0.7)).unwrap();
    c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
    let mut s = StateVector::zero(2);
    c.run(&mut s).unwrap();
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.5, 0.0, 0.0, 0.5, -1.0, 0.2, 0.0, 0.0, 0.2, 0.3, 0.1, 0.0, 0.0, 0.1, 2.0],
    )
    .map(|v| C64::new(v, 0.0));
    let d = pauli_decompose(&m).unwrap();
    let exact = d.expectation(&s).unwrap();
    let a = ShotSampler::new(20_000, 7).estimate(&d, &s).unwrap();
    let b = ShotSampler::new(20_000, 7).estimate(&d, &s).unwrap();
    assert_eq!(a, b);
    let weight: f64 = d.terms.iter().map(|t| t.coefficient.norm()).sum();
    assert!((a - exact).abs() < 5.0 * weight / (20_000f64).sqrt());
}
