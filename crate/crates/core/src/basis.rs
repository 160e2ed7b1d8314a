//! Morse potential bound states.
//!
//! The potential is `V(x) = D (e^{-2βx} - 2 e^{-βx})` in the dimensionless
//! displacement `x = r/r0 - 1`. With `λ = sqrt(2 μ D r0²)/β` the bound levels
//! are `n = 0..=n_max` with `s_n = 2λ - 1 - 2n > 0`, energies
//! `E_n = -β² s_n² / (8 μ r0²)` and eigenfunctions
//! `ψ_n(x) = N_n e^{-ξ/2} ξ^{s_n/2} L_n^{s_n}(ξ)`, `ξ = 2λ e^{-βx}`,
//! normalized as `∫ ψ_n² r0 dx = 1`.

use nalgebra::DMatrix;

use crate::special::{laguerre_scaled, ln_gamma, QuadratureRule};
use crate::{Error, Result};

/// Molecular constants in atomic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseParams {
    /// Dissociation energy `D` (hartree).
    pub dissociation_energy: f64,
    /// Range parameter `β` of the dimensionless coordinate.
    pub range_parameter: f64,
    /// Equilibrium internuclear distance `r0` (bohr).
    pub equilibrium_distance: f64,
    /// Reduced mass `μ` (electron masses).
    pub reduced_mass: f64,
}

impl MorseParams {
    /// Hydrogen iodide.
    pub const HI: MorseParams = MorseParams {
        dissociation_energy: 0.1125,
        range_parameter: 2.0793,
        equilibrium_distance: 3.0416,
        reduced_mass: 1819.99,
    };

    pub fn new(
        dissociation_energy: f64,
        range_parameter: f64,
        equilibrium_distance: f64,
        reduced_mass: f64,
    ) -> Result<Self> {
        let params = Self { dissociation_energy, range_parameter, equilibrium_distance, reduced_mass };
        params.validate()?;
        Ok(params)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "HI" => Some(Self::HI),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("D", self.dissociation_energy),
            ("beta", self.range_parameter),
            ("r0", self.equilibrium_distance),
            ("mu", self.reduced_mass),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams { field, reason: format!("must be positive and finite, got {value}") });
            }
        }
        Ok(())
    }

    /// `λ` without validation.
    pub fn lambda(&self) -> f64 {
        (2.0 * self.reduced_mass * self.dissociation_energy).sqrt() * self.equilibrium_distance
            / self.range_parameter
    }

    pub fn potential(&self, x: f64) -> f64 {
        let e = (-self.range_parameter * x).exp();
        self.dissociation_energy * (e * e - 2.0 * e)
    }

    /// `1 / (2 μ r0²)`: the kinetic energy operator is this times `-d²/dx²`.
    pub fn kinetic_prefactor(&self) -> f64 {
        1.0 / (2.0 * self.reduced_mass * self.equilibrium_distance.powi(2))
    }

    /// Harmonic frequency of the well bottom, `(β/r0) sqrt(2D/μ)`.
    pub fn harmonic_frequency(&self) -> f64 {
        self.range_parameter / self.equilibrium_distance
            * (2.0 * self.dissociation_energy / self.reduced_mass).sqrt()
    }

    /// Magnitude of the (level independent) second difference of the spectrum,
    /// `β² / (μ r0²)`.
    pub fn anharmonicity(&self) -> f64 {
        self.range_parameter.powi(2) / (self.reduced_mass * self.equilibrium_distance.powi(2))
    }
}

pub fn derive_lambda(params: &MorseParams) -> Result<f64> {
    params.validate()?;
    Ok(params.lambda())
}

/// Number of levels `n ≥ 0` with `2λ - 1 - 2n > 0`.
pub fn bound_state_count(params: &MorseParams) -> Result<usize> {
    let lambda = derive_lambda(params)?;
    count_for_lambda(lambda)
}

fn count_for_lambda(lambda: f64) -> Result<usize> {
    if lambda <= 0.5 {
        return Err(Error::NoBoundStates { lambda });
    }
    // s_n > 0  <=>  n < λ - 1/2
    let count = (lambda - 0.5).ceil() as usize;
    Ok(count.max(1))
}

/// Bound-state energy `E_n` in hartree.
pub fn energy(params: &MorseParams, n: usize) -> Result<f64> {
    let lambda = derive_lambda(params)?;
    let count = count_for_lambda(lambda)?;
    if n >= count {
        return Err(Error::IndexOutOfRange { index: n, n_max: count - 1 });
    }
    Ok(energy_unchecked(params, lambda, n))
}

fn energy_unchecked(params: &MorseParams, lambda: f64, n: usize) -> f64 {
    let s = 2.0 * lambda - 1.0 - 2.0 * n as f64;
    -params.range_parameter.powi(2) * s * s / (8.0 * params.reduced_mass * params.equilibrium_distance.powi(2))
}

const X_LOWER: f64 = -0.9;
const PANEL_ORDER: usize = 16;
const MIN_NODES: usize = 2000;
const TAIL_MASS_LIMIT: f64 = 1e-12;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Bound-state eigenbasis together with the quadrature rule used for every
/// integral over `x`.
#[derive(Debug, Clone)]
pub struct BoundBasis {
    params: MorseParams,
    lambda: f64,
    energies: Vec<f64>,
    s_values: Vec<f64>,
    ln_norms: Vec<f64>,
    quad: QuadratureRule,
    /// `ψ_n` at every quadrature node, one row per level.
    table: DMatrix<f64>,
    orthonormality_residual: f64,
    tail_mass: f64,
}

impl BoundBasis {
    pub fn new(params: MorseParams) -> Result<Self> {
        let lambda = derive_lambda(&params)?;
        let count = count_for_lambda(lambda)?;
        let energies: Vec<f64> = (0..count).map(|n| energy_unchecked(&params, lambda, n)).collect();
        let s_values: Vec<f64> = (0..count).map(|n| 2.0 * lambda - 1.0 - 2.0 * n as f64).collect();
        let ln_norms = s_values
            .iter()
            .enumerate()
            .map(|(n, &s)| {
                let nf = n as f64;
                0.5 * (params.range_parameter.ln() + s.ln() + ln_gamma(nf + 1.0)
                    - ln_gamma(2.0 * lambda - nf)
                    - params.equilibrium_distance.ln())
            })
            .collect();

        let mut basis = Self {
            params,
            lambda,
            energies,
            s_values,
            ln_norms,
            quad: QuadratureRule { nodes: vec![], weights: vec![] },
            table: DMatrix::zeros(0, 0),
            orthonormality_residual: f64::NAN,
            tail_mass: f64::NAN,
        };
        let (quad, tail_mass) = basis.build_quadrature()?;
        basis.tail_mass = tail_mass;
        basis.table = basis.tabulate(&quad.nodes)?;
        basis.quad = quad;
        basis.orthonormality_residual = basis.compute_orthonormality_residual();
        if !(basis.orthonormality_residual < ORTHONORMALITY_TOLERANCE) {
            return Err(Error::QuadratureAccuracy {
                residual: basis.orthonormality_residual,
                tolerance: ORTHONORMALITY_TOLERANCE,
            });
        }
        Ok(basis)
    }

    /// Composite Gauss–Legendre rule on `[-0.9, x_hi]`. Panels are fine up to
    /// two units past the outer turning point of the highest level and coarse
    /// in the classically forbidden tail; `x_hi` is the first coarse break
    /// beyond which every level keeps less than `1e-12` of its norm.
    fn build_quadrature(&self) -> Result<(QuadratureRule, f64)> {
        let p = &self.params;
        let beta = p.range_parameter;
        let e_top = *self.energies.last().expect("at least one level");
        let y_turn = 1.0 - (1.0 + e_top / p.dissociation_energy).max(0.0).sqrt();
        let x_turn = -y_turn.ln() / beta;
        let fine_end = x_turn + 2.0;

        // fastest local oscillation sits at the bottom of the well
        let k_max = ((e_top + p.dissociation_energy) / p.kinetic_prefactor()).sqrt();
        let mut width = (0.05f64).min(std::f64::consts::PI / k_max.max(1e-12));
        let span = fine_end - X_LOWER;
        let min_panels = MIN_NODES.div_ceil(PANEL_ORDER);
        if span / width < min_panels as f64 {
            width = span / min_panels as f64;
        }
        let n_fine = (span / width).ceil() as usize;
        let mut breaks: Vec<f64> = (0..=n_fine).map(|i| X_LOWER + span * i as f64 / n_fine as f64).collect();

        let s_min = *self.s_values.last().expect("at least one level");
        let coarse_width = 0.5;
        let far = (60.0 / (beta * s_min)).min(20_000.0);
        let n_coarse = (far / coarse_width).ceil() as usize;
        let coarse_breaks: Vec<f64> = (0..=n_coarse).map(|i| fine_end + coarse_width * i as f64).collect();

        // panel masses for every level, accumulated from the outside in
        let panel_rule = QuadratureRule::composite(&[-1.0, 1.0], PANEL_ORDER);
        let mut panel_mass = vec![0.0; n_coarse];
        for (k, pair) in coarse_breaks.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut worst: f64 = 0.0;
            for n in 0..self.energies.len() {
                let mut mass = 0.0;
                for (t, w) in panel_rule.nodes.iter().zip(&panel_rule.weights) {
                    let psi = self.eigenfunction_unchecked(n, mid + half * t)?;
                    mass += half * w * psi * psi * p.equilibrium_distance;
                }
                worst = worst.max(mass);
            }
            panel_mass[k] = worst;
        }
        let mut tail = 0.0;
        let mut cut = n_coarse;
        for k in (0..n_coarse).rev() {
            if tail + panel_mass[k] >= TAIL_MASS_LIMIT {
                break;
            }
            tail += panel_mass[k];
            cut = k;
        }
        breaks.extend_from_slice(&coarse_breaks[1..=cut]);
        Ok((QuadratureRule::composite(&breaks, PANEL_ORDER), tail))
    }

    fn tabulate(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let mut table = DMatrix::zeros(self.len(), nodes.len());
        for (j, &x) in nodes.iter().enumerate() {
            for n in 0..self.len() {
                table[(n, j)] = self.eigenfunction_unchecked(n, x)?;
            }
        }
        Ok(table)
    }

    fn compute_orthonormality_residual(&self) -> f64 {
        let gram = self.weighted_gram(|_| 1.0);
        let mut residual: f64 = 0.0;
        for m in 0..gram.nrows() {
            for n in 0..gram.ncols() {
                let target = if m == n { 1.0 } else { 0.0 };
                residual = residual.max((gram[(m, n)] - target).abs());
            }
        }
        residual
    }

    /// `∫ ψ_m(x) f(x) ψ_n(x) r0 dx` for all level pairs.
    pub fn weighted_gram(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let r0 = self.params.equilibrium_distance;
        let mut scaled = self.table.clone();
        for (j, (&x, &w)) in self.quad.nodes.iter().zip(&self.quad.weights).enumerate() {
            let factor = w * f(x) * r0;
            scaled.column_mut(j).scale_mut(factor);
        }
        &scaled * self.table.transpose()
    }

    /// Matrix elements `x_mn = ∫ ψ_m x ψ_n r0 dx` of the dimensionless position.
    pub fn position_matrix(&self) -> DMatrix<f64> {
        let x = self.weighted_gram(|x| x);
        // symmetric by construction up to rounding in the product
        (&x + x.transpose()) * 0.5
    }

    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        if n >= self.len() {
            return Err(Error::IndexOutOfRange { index: n, n_max: self.n_max() });
        }
        self.eigenfunction_unchecked(n, x)
    }

    fn eigenfunction_unchecked(&self, n: usize, x: f64) -> Result<f64> {
        let ln_xi = (2.0 * self.lambda).ln() - self.params.range_parameter * x;
        if ln_xi > 700.0 {
            // e^{-ξ/2} underflows long before ξ^{s/2} L matters
            return Ok(0.0);
        }
        let xi = ln_xi.exp();
        let s = self.s_values[n];
        let lag = laguerre_scaled(n, s, xi);
        if lag.sign == 0.0 {
            return Ok(0.0);
        }
        let ln_abs = self.ln_norms[n] + 0.5 * s * ln_xi - 0.5 * xi + lag.ln_abs;
        if ln_abs.is_nan() || ln_abs > 700.0 {
            return Err(Error::NumericOverflow { what: format!("psi_{n}({x})") });
        }
        Ok(lag.sign * ln_abs.exp())
    }

    /// All bound eigenfunctions evaluated at `x`.
    pub fn eigenfunctions_at(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = self.eigenfunction_unchecked(n, x).unwrap_or(0.0);
        }
    }

    pub fn params(&self) -> &MorseParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of bound levels.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.len() - 1
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn norms(&self) -> Vec<f64> {
        self.ln_norms.iter().map(|l| l.exp()).collect()
    }

    pub fn ln_norms(&self) -> &[f64] {
        &self.ln_norms
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Eigenfunction values at the quadrature nodes (levels × nodes).
    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.orthonormality_residual
    }

    /// Largest norm fraction of any level lying beyond the quadrature range.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `E_1 - E_0`.
    pub fn fundamental_frequency(&self) -> f64 {
        if self.len() < 2 {
            return self.params.harmonic_frequency();
        }
        self.energies[1] - self.energies[0]
    }
}
