//! Reduced dynamics of the Morse oscillator in a super-Ohmic bosonic bath.
//!
//! The density matrix obeys
//!
//! ```text
//! dρ/dt = -i[H, ρ]
//!       + (O₂ ρ O† + O ρ O₂† - O† O₂ ρ - ρ O₂† O)
//!       + (O₁† ρ O + O† ρ O₁ - O O₁† ρ - ρ O₁ O†)
//! ```
//!
//! in the energy eigenbasis, where `O` is the upper triangle of the position
//! matrix and the modified operators carry the bath spectrum at each
//! transition frequency `ω = E_n - E_m > 0`:
//! `O₁^{mn} = O^{mn} (δω³/2) n̄(ω)`, `O₂^{mn} = O^{mn} (δω³/2) (n̄(ω)+1)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::BoundBasis;
use crate::coherent::StateVector;
use crate::{Error, Result};

/// Trace drift above which a run is declared unstable.
pub const TRACE_INSTABILITY: f64 = 1e-6;
/// Invariant thresholds checked at every snapshot.
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    /// `k_B T` in hartree.
    Hartree(f64),
    /// Multiples of `ħω₀₁/k_B`, `ω₀₁` being the fundamental transition.
    Fundamental(f64),
}

impl Temperature {
    pub fn in_hartree(&self, omega01: f64) -> f64 {
        match *self {
            Temperature::Hartree(t) => t,
            Temperature::Fundamental(t) => t * omega01,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Temperature::Hartree(t) | Temperature::Fundamental(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Coupling strength δ in `2πσ²(ω)g(ω) = δω³` (a.u.).
    pub delta: f64,
    pub temperature: Temperature,
}

impl BathSpec {
    pub fn new(delta: f64, temperature: Temperature) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParams { field: "delta", reason: format!("must be >= 0, got {delta}") });
        }
        let t = temperature.value();
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParams { field: "temperature", reason: format!("must be >= 0, got {t}") });
        }
        Ok(Self { delta, temperature })
    }

    pub fn closed() -> Self {
        Self { delta: 0.0, temperature: Temperature::Hartree(0.0) }
    }
}

/// Mean thermal occupation `1/(e^{ω/T} - 1)`; zero at `T = 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperators {
    /// `O`: strictly upper triangular part of the position matrix.
    pub lowering: DMatrix<f64>,
    /// `O₁`, absorption-modified.
    pub absorption: DMatrix<f64>,
    /// `O₂`, emission-modified.
    pub emission: DMatrix<f64>,
}

pub fn build_lowering_operator(x_matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x_matrix.nrows();
    DMatrix::from_fn(n, n, |m, k| if m < k { x_matrix[(m, k)] } else { 0.0 })
}

pub fn build_modified_operators(
    lowering: &DMatrix<f64>,
    energies: &[f64],
    delta: f64,
    temperature: f64,
) -> Result<JumpOperators> {
    let n = lowering.nrows();
    if lowering.ncols() != n || energies.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: energies.len() });
    }
    let mut absorption = DMatrix::zeros(n, n);
    let mut emission = DMatrix::zeros(n, n);
    for k in 0..n {
        for m in 0..k {
            let omega = energies[k] - energies[m];
            debug_assert!(omega > 0.0, "energies must increase");
            let spectral = 0.5 * delta * omega.powi(3);
            let occupation = bose_occupation(omega, temperature);
            absorption[(m, k)] = lowering[(m, k)] * spectral * occupation;
            emission[(m, k)] = lowering[(m, k)] * spectral * (occupation + 1.0);
        }
    }
    Ok(JumpOperators { lowering: lowering.clone(), absorption, emission })
}

/// Right-hand side of the master equation, term by term as written.
pub fn master_rhs(
    rho: &DMatrix<Complex64>,
    energies: &[f64],
    ops: &JumpOperators,
) -> Result<DMatrix<Complex64>> {
    let n = energies.len();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
    }
    if ops.lowering.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ops.lowering.nrows() });
    }
    let c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let o = c(&ops.lowering);
    let o1 = c(&ops.absorption);
    let o2 = c(&ops.emission);
    let (od, o1d, o2d) = (o.adjoint(), o1.adjoint(), o2.adjoint());
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        energies.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    let i = Complex64::new(0.0, 1.0);

    let mut out = (&h * rho - rho * &h) * (-i);
    out += &o2 * rho * &od + &o * rho * &o2d - &od * &o2 * rho - rho * &o2d * &o;
    out += &o1d * rho * &o + &od * rho * &o1 - &o * &o1d * rho - rho * &o1 * &od;
    Ok(out)
}

/// Density matrix in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self(matrix))
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let n = state.len();
        Self(DMatrix::from_fn(n, n, |m, k| state.coeffs[m] * state.coeffs[k].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for m in 0..n {
            for k in m..n {
                worst = worst.max((self.0[(m, k)] - self.0[(k, m)].conj()).norm());
            }
        }
        worst
    }

    pub fn purity(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.0[(n, n)].re).collect()
    }

    /// `Tr(Hρ)` for a diagonal Hamiltonian.
    pub fn mean_energy(&self, energies: &[f64]) -> f64 {
        energies.iter().enumerate().map(|(n, e)| e * self.0[(n, n)].re).sum()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(hermitian).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Exact evolution of a pure state with `δ = 0`: `c_n(t) = c_n(0) e^{-i E_n t}`.
pub fn unitary_evolve(state: &StateVector, energies: &[f64], t: f64) -> StateVector {
    let coeffs = state
        .coeffs
        .iter()
        .zip(energies)
        .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
        .collect();
    StateVector { coeffs, leakage: state.leakage }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Time of the grid step the snapshot was taken on.
    pub time: f64,
    pub requested_time: f64,
    pub rho: DensityMatrix,
    pub trace_residual: f64,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
}

impl Snapshot {
    pub fn invariants_hold(&self) -> bool {
        self.trace_residual < TRACE_TOLERANCE
            && self.hermiticity_residual < HERMITICITY_TOLERANCE
            && self.min_eigenvalue >= POSITIVITY_TOLERANCE
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub dt: f64,
    pub steps: usize,
    /// Largest `|Tr ρ - 1|` seen on any step.
    pub max_trace_drift: f64,
}

impl Trajectory {
    pub fn invariants_hold(&self) -> bool {
        self.max_trace_drift < TRACE_TOLERANCE && self.snapshots.iter().all(Snapshot::invariants_hold)
    }
}

/// A system Hamiltonian together with its bath operators.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    energies: Vec<f64>,
    ops: JumpOperators,
    bath: BathSpec,
    temperature: f64,
}

impl OpenSystem {
    pub fn new(basis: &BoundBasis, bath: &BathSpec) -> Result<Self> {
        Self::from_parts(basis.energies().to_vec(), &basis.position_matrix(), bath)
    }

    /// Arbitrary spectrum and position matrix, e.g. a truncated ladder.
    /// `energies` must be strictly increasing.
    pub fn from_parts(energies: Vec<f64>, x_matrix: &DMatrix<f64>, bath: &BathSpec) -> Result<Self> {
        let n = energies.len();
        if x_matrix.nrows() != n || x_matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x_matrix.nrows() });
        }
        if !energies.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams { field: "energies", reason: "must be strictly increasing".into() });
        }
        let omega01 = if n > 1 { energies[1] - energies[0] } else { 0.0 };
        let temperature = bath.temperature.in_hartree(omega01);
        let lowering = build_lowering_operator(x_matrix);
        let ops = build_modified_operators(&lowering, &energies, bath.delta, temperature)?;
        Ok(Self { energies, ops, bath: *bath, temperature })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn operators(&self) -> &JumpOperators {
        &self.ops
    }

    pub fn bath(&self) -> &BathSpec {
        &self.bath
    }

    /// Bath temperature in hartree.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Zero-temperature relaxation rate `Γ_ij = δ x_ij² ω_ij³` from level
    /// `upper` to `lower`.
    pub fn relaxation_rate(&self, lower: usize, upper: usize) -> f64 {
        let omega = self.energies[upper] - self.energies[lower];
        self.bath.delta * self.ops.lowering[(lower, upper)].powi(2) * omega.powi(3)
    }

    /// `min(0.05/ω_max, T_rev/(2×10⁵))`.
    pub fn default_time_step(&self, revival_time: f64) -> f64 {
        let omega_max = self.energies.last().unwrap() - self.energies[0];
        (0.05 / omega_max).min(revival_time / 2.0e5)
    }

    pub fn rhs(&self, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
        master_rhs(rho.matrix(), &self.energies, &self.ops)
    }

    /// Fixed-step RK4 integration from `rho0`, snapshotting on the grid step
    /// nearest to each requested time.
    pub fn evolve(&self, rho0: &DensityMatrix, options: &EvolveOptions) -> Result<Trajectory> {
        let n = self.energies.len();
        if rho0.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho0.dim() });
        }
        let EvolveOptions { dt, t_final, ref snapshot_times } = *options;
        if !(dt > 0.0 && dt.is_finite()) || !(t_final >= 0.0) {
            return Err(Error::InvalidSchedule(format!("dt = {dt}, t_final = {t_final}")));
        }
        if !snapshot_times.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidSchedule("snapshot times must be sorted".into()));
        }
        if snapshot_times.iter().any(|&t| t < 0.0 || t > t_final * (1.0 + 1e-12)) {
            return Err(Error::InvalidSchedule(format!("snapshot times must lie in [0, {t_final}]")));
        }
        let total_steps = (t_final / dt).round() as usize;
        let targets: Vec<usize> =
            snapshot_times.iter().map(|t| ((t / dt).round() as usize).min(total_steps)).collect();

        let mut kernel = Kernel::new(&self.energies, &self.ops);
        let mut state = Rk4State::new(n);
        for m in 0..n {
            for k in 0..n {
                state.re[(m, k)] = rho0.matrix()[(m, k)].re;
                state.im[(m, k)] = rho0.matrix()[(m, k)].im;
            }
        }
        let initial_trace = state.re.trace();
        let mut max_drift = (initial_trace - 1.0).abs();
        let mut snapshots = Vec::with_capacity(targets.len());
        let mut next = 0;
        let take = |step: usize, state: &Rk4State, snapshots: &mut Vec<Snapshot>, next: &mut usize| {
            while *next < targets.len() && targets[*next] == step {
                snapshots.push(make_snapshot(state, step as f64 * dt, snapshot_times[*next]));
                *next += 1;
            }
        };
        take(0, &state, &mut snapshots, &mut next);
        for step in 1..=total_steps {
            kernel.rk4_step(&mut state, dt);
            let drift = (state.re.trace() - 1.0).abs();
            if !(drift <= TRACE_INSTABILITY) {
                return Err(Error::StepInstability { time: step as f64 * dt, drift });
            }
            max_drift = max_drift.max(drift);
            take(step, &state, &mut snapshots, &mut next);
        }
        for snap in &snapshots {
            if snap.min_eigenvalue < POSITIVITY_TOLERANCE {
                log::warn!("negative eigenvalue {:e} at t = {}", snap.min_eigenvalue, snap.time);
            } else if snap.min_eigenvalue < 0.0 {
                log::debug!("small negative eigenvalue {:e} at t = {}", snap.min_eigenvalue, snap.time);
            }
        }
        Ok(Trajectory { snapshots, dt, steps: total_steps, max_trace_drift: max_drift })
    }
}

fn make_snapshot(state: &Rk4State, time: f64, requested_time: f64) -> Snapshot {
    let n = state.re.nrows();
    let rho = DensityMatrix(DMatrix::from_fn(n, n, |m, k| Complex64::new(state.re[(m, k)], state.im[(m, k)])));
    Snapshot {
        time,
        requested_time,
        trace_residual: (rho.trace() - 1.0).norm(),
        hermiticity_residual: rho.hermiticity_residual(),
        min_eigenvalue: rho.min_eigenvalue(),
        rho,
    }
}

struct Rk4State {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Rk4State {
    fn new(n: usize) -> Self {
        Self { re: DMatrix::zeros(n, n), im: DMatrix::zeros(n, n) }
    }
}

/// Real-arithmetic evaluation of the master equation for Hermitian `ρ = A + iB`.
///
/// With `K = O†O₂ + OO₁†`, `X = O₂ρO†` and `Y = O₁†ρO` the dissipator is
/// `S + S†` where `S = -Kρ + X + Y`; all operators are real, so each product
/// acts on `A` and `B` stacked side by side.
struct Kernel {
    n: usize,
    energies: Vec<f64>,
    dissipative: bool,
    thermal: bool,
    k: DMatrix<f64>,
    emission: DMatrix<f64>,
    absorption_t: DMatrix<f64>,
    lowering: DMatrix<f64>,
    lowering_t: DMatrix<f64>,
    wide_in: DMatrix<f64>,
    wide_out: DMatrix<f64>,
    tall_in: DMatrix<f64>,
    tall_out: DMatrix<f64>,
    s_re: DMatrix<f64>,
    s_im: DMatrix<f64>,
    k1: Rk4State,
    k2: Rk4State,
    k3: Rk4State,
    k4: Rk4State,
    stage: Rk4State,
}

impl Kernel {
    fn new(energies: &[f64], ops: &JumpOperators) -> Self {
        let n = energies.len();
        let lowering_t = ops.lowering.transpose();
        let k = &lowering_t * &ops.emission + &ops.lowering * ops.absorption.transpose();
        Self {
            n,
            energies: energies.to_vec(),
            dissipative: ops.emission.iter().any(|&v| v != 0.0),
            thermal: ops.absorption.iter().any(|&v| v != 0.0),
            k,
            emission: ops.emission.clone(),
            absorption_t: ops.absorption.transpose(),
            lowering: ops.lowering.clone(),
            lowering_t,
            wide_in: DMatrix::zeros(n, 2 * n),
            wide_out: DMatrix::zeros(n, 2 * n),
            tall_in: DMatrix::zeros(2 * n, n),
            tall_out: DMatrix::zeros(2 * n, n),
            s_re: DMatrix::zeros(n, n),
            s_im: DMatrix::zeros(n, n),
            k1: Rk4State::new(n),
            k2: Rk4State::new(n),
            k3: Rk4State::new(n),
            k4: Rk4State::new(n),
            stage: Rk4State::new(n),
        }
    }

    fn rk4_step(&mut self, y: &mut Rk4State, dt: f64) {
        let mut k1 = std::mem::replace(&mut self.k1, Rk4State::new(0));
        let mut k2 = std::mem::replace(&mut self.k2, Rk4State::new(0));
        let mut k3 = std::mem::replace(&mut self.k3, Rk4State::new(0));
        let mut k4 = std::mem::replace(&mut self.k4, Rk4State::new(0));
        let mut stage = std::mem::replace(&mut self.stage, Rk4State::new(0));

        self.rhs(&y.re, &y.im, &mut k1);
        axpy_into(&mut stage, y, 0.5 * dt, &k1);
        self.rhs(&stage.re, &stage.im, &mut k2);
        axpy_into(&mut stage, y, 0.5 * dt, &k2);
        self.rhs(&stage.re, &stage.im, &mut k3);
        axpy_into(&mut stage, y, dt, &k3);
        self.rhs(&stage.re, &stage.im, &mut k4);

        let w = dt / 6.0;
        for (((yv, a), (b, c)), d) in y
            .re
            .iter_mut()
            .zip(k1.re.iter())
            .zip(k2.re.iter().zip(k3.re.iter()))
            .zip(k4.re.iter())
        {
            *yv += w * (a + 2.0 * b + 2.0 * c + d);
        }
        for (((yv, a), (b, c)), d) in y
            .im
            .iter_mut()
            .zip(k1.im.iter())
            .zip(k2.im.iter().zip(k3.im.iter()))
            .zip(k4.im.iter())
        {
            *yv += w * (a + 2.0 * b + 2.0 * c + d);
        }

        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.stage = stage;
    }

    fn rhs(&mut self, a: &DMatrix<f64>, b: &DMatrix<f64>, out: &mut Rk4State) {
        let n = self.n;
        if self.dissipative {
            self.wide_in.columns_mut(0, n).copy_from(a);
            self.wide_in.columns_mut(n, n).copy_from(b);

            // S = -Kρ
            self.k.mul_to(&self.wide_in, &mut self.wide_out);
            self.s_re.copy_from(&self.wide_out.columns(0, n));
            self.s_re.neg_mut();
            self.s_im.copy_from(&self.wide_out.columns(n, n));
            self.s_im.neg_mut();

            // S += O₂ ρ Oᵀ
            self.emission.mul_to(&self.wide_in, &mut self.wide_out);
            self.add_sandwich(false);

            // S += O₁ᵀ ρ O
            if self.thermal {
                self.absorption_t.mul_to(&self.wide_in, &mut self.wide_out);
                self.add_sandwich(true);
            }
        } else {
            self.s_re.fill(0.0);
            self.s_im.fill(0.0);
        }

        for k in 0..n {
            for m in 0..n {
                let gap = self.energies[m] - self.energies[k];
                out.re[(m, k)] = self.s_re[(m, k)] + self.s_re[(k, m)] + gap * b[(m, k)];
                out.im[(m, k)] = self.s_im[(m, k)] - self.s_im[(k, m)] - gap * a[(m, k)];
            }
        }
    }

    /// Multiplies the left product in `wide_out` from the right by `O` or
    /// `Oᵀ` and accumulates into `S`.
    fn add_sandwich(&mut self, right_is_lowering: bool) {
        let n = self.n;
        self.tall_in.rows_mut(0, n).copy_from(&self.wide_out.columns(0, n));
        self.tall_in.rows_mut(n, n).copy_from(&self.wide_out.columns(n, n));
        let right = if right_is_lowering { &self.lowering } else { &self.lowering_t };
        self.tall_in.mul_to(right, &mut self.tall_out);
        self.s_re += self.tall_out.rows(0, n);
        self.s_im += self.tall_out.rows(n, n);
    }
}

fn axpy_into(dst: &mut Rk4State, y: &Rk4State, h: f64, k: &Rk4State) {
    for ((d, &a), &b) in dst.re.iter_mut().zip(y.re.iter()).zip(k.re.iter()) {
        *d = a + h * b;
    }
    for ((d, &a), &b) in dst.im.iter_mut().zip(y.im.iter()).zip(k.im.iter()) {
        *d = a + h * b;
    }
}
