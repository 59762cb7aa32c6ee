//! HHL on the statevector simulator: phase estimation against `exp(iAt)`,
//! eigenvalue-inversion rotation, uncomputation and post-selection.
//!
//! Register layout: system qubits lowest, then the clock register, then
//! one ancilla.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{EmbeddedSystem, SolveDiagnostics, SolveReport};
use crate::quantum::{unitary_from_hamiltonian, Circuit, Gate, StateVector, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhlConfig {
    pub clock_qubits: usize,
    #[serde(default)]
    pub clock_state: ClockState,
    /// Evolution time; chosen from the spectrum when absent.
    pub evolution_time: Option<f64>,
    /// Inversion constant `C`; chosen from the spectrum when absent.
    pub rotation_constant: Option<f64>,
    /// Solves whose success probability falls below this fail.
    pub min_post_selection: f64,
    /// Unused by the exact simulation; kept so runs record it.
    pub seed: u64,
}

impl Default for HhlConfig {
    fn default() -> Self {
        HhlConfig {
            clock_qubits: 8,
            clock_state: ClockState::default(),
            evolution_time: None,
            rotation_constant: None,
            min_post_selection: 1e-6,
            seed: 0,
        }
    }
}

impl HhlConfig {
    pub fn with_clock_qubits(mut self, clock_qubits: usize) -> Self {
        self.clock_qubits = clock_qubits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.clock_qubits == 0 || self.clock_qubits > 20 {
            return Err(Error::InvalidOption(format!("clock qubits must be in 1..=20, got {}", self.clock_qubits)));
        }
        if matches!(self.evolution_time, Some(t) if !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidOption("evolution time must be positive".into()));
        }
        if matches!(self.rotation_constant, Some(c) if !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidOption("rotation constant must be positive".into()));
        }
        Ok(())
    }
}

/// Initial state of the clock register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockState {
    /// Hadamards on every clock qubit. Phases on the grid are read exactly,
    /// phases between grid points leak into distant readings.
    Uniform,
    /// Sine-weighted superposition. Leakage decays with the fourth power of
    /// the distance, at the cost of spreading on-grid phases over
    /// neighbouring readings.
    #[default]
    SineWindow,
}

/// How clock readings map back to eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseConvention {
    /// Readings `k ∈ [0, 2^c)` stand for `k·λ_res`; needs a PSD matrix.
    Unsigned,
    /// Readings at or above `2^(c−1)` stand for negative eigenvalues.
    Signed,
}

fn eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    a.clone().symmetric_eigen().eigenvalues
}

/// `t = 2π(1 − 2^−c)/λ_max`: the largest eigenvalue lands on the last clock
/// reading, so no phase wraps around.
pub fn tune_evolution_time(a: &DMatrix<f64>, clock_qubits: usize) -> Result<f64> {
    let lmax = eigenvalues(a).max();
    if lmax <= 0.0 {
        return Err(Error::InvalidOption("evolution time needs a positive largest eigenvalue".into()));
    }
    Ok(2.0 * PI * (1.0 - (-(clock_qubits as f64)).exp2()) / lmax)
}

fn schedule(spectrum: &DVector<f64>, clock_qubits: usize, state: ClockState) -> Result<(f64, PhaseConvention)> {
    let scale = spectrum.amax();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let readings = (1u64 << clock_qubits) as f64;
    if spectrum.min() >= -1e-12 * scale {
        Ok((2.0 * PI * (readings - 1.0) / (readings * spectrum.max()), PhaseConvention::Unsigned))
    } else {
        // the window spreads a phase over neighbouring readings; keep that
        // spread clear of the sign boundary
        let half = readings / 2.0;
        let margin = match state {
            ClockState::SineWindow if half > 4.0 => 3.0,
            _ => 1.0,
        };
        Ok((2.0 * PI * (half - margin) / (readings * scale), PhaseConvention::Signed))
    }
}

/// `√(2/T) Σ_τ sin(π(τ + ½)/T) |τ⟩` over `T = 2^c` clock values.
pub fn sine_window(clock_qubits: usize) -> DVector<f64> {
    let t = (1u64 << clock_qubits) as f64;
    DVector::from_fn(1 << clock_qubits, |k, _| (2.0 / t).sqrt() * (PI * (k as f64 + 0.5) / t).sin())
}

/// Householder reflection taking `|0⟩` to the sine window.
fn sine_window_preparation(clock_qubits: usize) -> DMatrix<C64> {
    let dim = 1 << clock_qubits;
    let mut v = -sine_window(clock_qubits);
    v[0] += 1.0;
    let vv = v.norm_squared();
    let h = DMatrix::identity(dim, dim) - &v * v.transpose() * (2.0 / vv);
    h.map(|x| C64::new(x, 0.0))
}

/// Quantum Fourier transform on `register` (first entry is the low bit).
pub fn qft(register: &[usize]) -> Vec<Gate> {
    let n = register.len();
    let mut gates = Vec::new();
    for i in (0..n).rev() {
        gates.push(Gate::H(register[i]));
        for j in (0..i).rev() {
            let angle = PI / (1u64 << (i - j)) as f64;
            gates.push(controlled_phase(register[j], register[i], angle));
        }
    }
    for i in 0..n / 2 {
        gates.extend(swap(register[i], register[n - 1 - i]));
    }
    gates
}

fn controlled_phase(control: usize, target: usize, angle: f64) -> Gate {
    let mut u = DMatrix::identity(2, 2);
    u[(1, 1)] = C64::from_polar(1.0, angle);
    Gate::ControlledUnitary { control: Some(control), targets: vec![target], unitary: u }
}

fn swap(a: usize, b: usize) -> [Gate; 3] {
    [Gate::Cnot { control: a, target: b }, Gate::Cnot { control: b, target: a }, Gate::Cnot { control: a, target: b }]
}

/// Everything about one HHL instance that does not depend on `b`.
#[derive(Debug, Clone)]
pub struct HhlPlan {
    a: DMatrix<f64>,
    system_qubits: usize,
    clock_qubits: usize,
    pub evolution_time: f64,
    pub rotation_constant: f64,
    pub convention: PhaseConvention,
    /// Eigenvalue spacing of one clock step.
    pub resolution: f64,
    circuit: Circuit,
    min_post_selection: f64,
}

/// Direction read from the post-selected system register.
#[derive(Debug, Clone, PartialEq)]
pub struct HhlOutput {
    /// Solution of the embedded system, scaled to best fit `b`.
    pub x: DVector<f64>,
    pub post_selection_probability: f64,
}

impl HhlPlan {
    /// `a` must be symmetric with a power-of-two dimension.
    pub fn new(a: &DMatrix<f64>, config: &HhlConfig) -> Result<Self> {
        config.validate()?;
        let dim = a.nrows();
        if dim != a.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Dimension(format!(
                "HHL needs a power-of-two square matrix, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::NotHermitian);
        }
        let spectrum = eigenvalues(a);
        let clock = config.clock_qubits;
        let (auto_t, convention) = schedule(&spectrum, clock, config.clock_state)?;
        let t = config.evolution_time.unwrap_or(auto_t);
        let resolution = 2.0 * PI / ((1u64 << clock) as f64 * t);
        let smallest = spectrum.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        let rotation_constant =
            config.rotation_constant.unwrap_or_else(|| resolution * (0.5 * smallest / resolution).floor().max(1.0));

        let system_qubits = dim.trailing_zeros() as usize;
        let clock_reg: Vec<usize> = (system_qubits..system_qubits + clock).collect();
        let ancilla = system_qubits + clock;
        let targets: Vec<usize> = (0..system_qubits).collect();
        let ac = a.map(|v| C64::new(v, 0.0));

        let mut estimation = Circuit::new(ancilla + 1);
        match config.clock_state {
            ClockState::Uniform => {
                for &q in &clock_reg {
                    estimation.push(Gate::H(q))?;
                }
            }
            ClockState::SineWindow => {
                let unitary = sine_window_preparation(clock);
                estimation.push(Gate::ControlledUnitary { control: None, targets: clock_reg.clone(), unitary })?;
            }
        }
        for (j, &q) in clock_reg.iter().enumerate() {
            let u = unitary_from_hamiltonian(&ac, t * (1u64 << j) as f64)?;
            estimation.push(Gate::ControlledUnitary { control: Some(q), targets: targets.clone(), unitary: u })?;
        }
        for g in qft(&clock_reg).iter().rev() {
            estimation.push(g.inverse())?;
        }

        // Without negative eigenvalues, readings below half the smallest
        // eigenvalue can only come from phases that wrapped past 2π.
        let wrap_below = match convention {
            PhaseConvention::Unsigned => (0.5 * smallest / resolution).floor() as usize,
            PhaseConvention::Signed => 0,
        };
        let angles = (0..1usize << clock)
            .map(|k| {
                let reading = match convention {
                    PhaseConvention::Signed if k >= 1 << (clock - 1) => k as f64 - (1u64 << clock) as f64,
                    PhaseConvention::Unsigned if k < wrap_below => k as f64 + (1u64 << clock) as f64,
                    _ => k as f64,
                };
                if reading == 0.0 {
                    0.0
                } else {
                    2.0 * (rotation_constant / (reading * resolution)).clamp(-1.0, 1.0).asin()
                }
            })
            .collect();

        let mut circuit = estimation.clone();
        circuit.push(Gate::MultiplexedRy { controls: clock_reg, target: ancilla, angles })?;
        circuit.append(&estimation.inverse())?;

        Ok(HhlPlan {
            a: a.clone(),
            system_qubits,
            clock_qubits: clock,
            evolution_time: t,
            rotation_constant,
            convention,
            resolution,
            circuit,
            min_post_selection: config.min_post_selection,
        })
    }

    pub fn qubits(&self) -> usize {
        self.circuit.qubits()
    }

    pub fn clock_qubits(&self) -> usize {
        self.clock_qubits
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Run the circuit on `|b⟩`, keep the branch with ancilla `1` and clock
    /// `0`, and rescale the direction by `α = ⟨b, Ax̂⟩/‖Ax̂‖²`.
    pub fn run(&self, b: &DVector<f64>) -> Result<HhlOutput> {
        let input = StateVector::from_real(b)?;
        let mut state = StateVector::extend(&input, self.qubits())?;
        self.circuit.run(&mut state)?;

        let ancilla_bit = 1 << (self.system_qubits + self.clock_qubits);
        let clock_mask = ((1 << self.clock_qubits) - 1) << self.system_qubits;
        let probability = state.probability(ancilla_bit | clock_mask, ancilla_bit);
        if !(probability >= self.min_post_selection) {
            return Err(Error::PostSelection { probability, threshold: self.min_post_selection });
        }
        let dim = 1 << self.system_qubits;
        let amps = state.amplitudes();
        let direction = DVector::from_fn(dim, |i, _| amps[ancilla_bit | i].re);
        let norm = direction.norm();
        if norm == 0.0 {
            return Err(Error::PostSelection { probability: 0.0, threshold: self.min_post_selection });
        }
        let direction = direction / norm;
        let image = &self.a * &direction;
        let denom = image.norm_squared();
        let alpha = if denom > 0.0 { b.dot(&image) / denom } else { 0.0 };
        Ok(HhlOutput { x: direction * alpha, post_selection_probability: probability })
    }
}

/// Solve an embedded system and map the answer back to the original one.
pub fn hhl_solve(system: &EmbeddedSystem, config: &HhlConfig) -> Result<SolveReport> {
    let plan = HhlPlan::new(&system.a, config)?;
    let out = plan.run(&system.b)?;
    let residual = (&system.a * &out.x - &system.b).norm() / system.b.norm();
    Ok(SolveReport {
        x: system.embedding.recover(&out.x),
        relative_residual: residual,
        kappa_raw: None,
        kappa_precond: None,
        diagnostics: SolveDiagnostics {
            backend: "hhl".into(),
            quantum_solves: 1,
            post_selection_probability: Some(out.post_selection_probability),
            clock_qubits: Some(plan.clock_qubits),
            qubits: Some(plan.qubits()),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{quantum_embedding, LinearSystem};
    use crate::quantum::max_abs;

    #[test]
    fn qft_matches_discrete_fourier_transform() {
        for n in 1..=4 {
            let reg: Vec<usize> = (0..n).collect();
            let mut c = Circuit::new(n);
            for g in qft(&reg) {
                c.push(g).unwrap();
            }
            let dim = 1usize << n;
            let dft = DMatrix::from_fn(dim, dim, |y, k| {
                C64::from_polar(1.0 / (dim as f64).sqrt(), 2.0 * PI * (y * k) as f64 / dim as f64)
            });
            assert!(max_abs(&(c.unitary().unwrap() - dft)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn evolution_time_examples() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let t = tune_evolution_time(&eye, 4).unwrap();
        assert!((t - 2.0 * PI * 15.0 / 16.0).abs() < 1e-14);
        let t2 = tune_evolution_time(&(eye * 2.0), 4).unwrap();
        assert!((t2 - t / 2.0).abs() < 1e-14);
        assert!(tune_evolution_time(&DMatrix::zeros(2, 2), 4).is_err());
    }

    #[test]
    fn identity_returns_b() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::from_vec(vec![0.5, -0.5, 0.5, 0.5]);
        let config = HhlConfig { clock_state: ClockState::Uniform, ..HhlConfig::default().with_clock_qubits(4) };
        let plan = HhlPlan::new(&a, &config).unwrap();
        // λ = 1 sits on reading 15; C is half of it rounded down to a reading
        assert!((plan.resolution - 1.0 / 15.0).abs() < 1e-12);
        assert!((plan.rotation_constant - 7.0 / 15.0).abs() < 1e-12);
        let out = plan.run(&b).unwrap();
        assert!((&out.x - &b).amax() < 1e-10);
        assert!((out.post_selection_probability - plan.rotation_constant.powi(2)).abs() < 1e-10);

        // the window spreads the phase, which only rescales the answer here
        let plan = HhlPlan::new(&a, &HhlConfig::default().with_clock_qubits(4)).unwrap();
        let out = plan.run(&b).unwrap();
        assert!((&out.x - &b).amax() < 1e-10);
    }

    #[test]
    fn diagonal_inversion() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        let system = LinearSystem::new(a, DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let report = hhl_solve(&quantum_embedding(&system), &HhlConfig::default().with_clock_qubits(6)).unwrap();
        assert!(report.x[0].abs() < 1e-8);
        assert!((report.x[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn negative_eigenvalues_use_signed_phases() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        let plan = HhlPlan::new(&a, &HhlConfig::default().with_clock_qubits(6)).unwrap();
        assert_eq!(plan.convention, PhaseConvention::Signed);
        let b = DVector::from_vec(vec![0.6, 0.8]);
        let out = plan.run(&b).unwrap();
        let exact = DVector::from_vec(vec![0.6, -1.6]);
        assert!((&out.x - &exact).amax() < 0.05, "{}", out.x);
    }

    #[test]
    fn tiny_success_probability_is_an_error() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        let config = HhlConfig { rotation_constant: Some(1e-5), ..HhlConfig::default() };
        let plan = HhlPlan::new(&a, &config).unwrap();
        let err = plan.run(&DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::PostSelection { .. }));
    }

    #[test]
    fn rejects_nonsymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(HhlPlan::new(&a, &HhlConfig::default()), Err(Error::NotHermitian)));
    }
}
