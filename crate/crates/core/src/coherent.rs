//! SU(1,1) coherent states of the Morse oscillator, truncated to the bound
//! levels.
//!
//! `|η, s⟩ = (1-|η|²)^{(1+s)/2} Σ_k sqrt(Γ(k+s+1)/(k! Γ(1+s))) η^k |k⟩` with
//! `|η| = tanh|α|` and `arg η = arg α`. Coefficient `k` is placed on bound
//! level `k`; `s` is the ground-state index `2λ - 1`.

use num_complex::Complex64;

use crate::{Error, Result};

pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentSpec {
    pub eta: Complex64,
    pub s: f64,
}

impl CoherentSpec {
    pub fn from_eta(eta: Complex64, s: f64) -> Result<Self> {
        if !(eta.norm() < 1.0) {
            return Err(Error::InvalidCoherentState(format!("|eta| = {} must be < 1", eta.norm())));
        }
        if !(s > 0.0) {
            return Err(Error::InvalidCoherentState(format!("s = {s} must be positive")));
        }
        Ok(Self { eta, s })
    }

    /// Displacement amplitude `α`: `|η| = tanh|α|` with the phase of `α`.
    pub fn from_alpha(alpha: Complex64, s: f64) -> Result<Self> {
        let modulus = alpha.norm();
        let eta = if modulus == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            alpha * (modulus.tanh() / modulus)
        };
        Self::from_eta(eta, s)
    }

    /// Real positive `η` whose truncated, renormalized state has mean level
    /// `nbar` on `levels` bound states. Solved by bisection on `|η|`.
    pub fn from_mean_level(nbar: f64, s: f64, levels: usize) -> Result<Self> {
        if !(nbar >= 0.0 && nbar < (levels.saturating_sub(1)) as f64) {
            return Err(Error::InvalidCoherentState(format!(
                "target mean level {nbar} outside [0, {})",
                levels.saturating_sub(1)
            )));
        }
        let mean_at = |modulus: f64| {
            let spec = CoherentSpec { eta: Complex64::new(modulus, 0.0), s };
            mean_level(&raw_coefficients(&spec, levels).0).mean
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-12);
        if mean_at(hi) < nbar {
            return Err(Error::InvalidCoherentState(format!("mean level {nbar} unreachable with {levels} levels")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_at(mid) < nbar {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Self::from_eta(Complex64::new(0.5 * (lo + hi), 0.0), s)
    }
}

/// Complex amplitudes over bound levels `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: Vec<Complex64>,
    /// Norm fraction discarded by truncation, `1 - Σ|c_k|²` before
    /// renormalization.
    pub leakage: f64,
}

impl StateVector {
    pub fn basis_state(levels: usize, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); levels];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs, leakage: 0.0 }
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let coeffs = coeffs.into_iter().map(|c| c / norm).collect();
        Self { coeffs, leakage: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Unnormalized coefficients by the ratio recurrence
/// `c_{k+1}/c_k = η sqrt((k+s+1)/(k+1))`, plus their squared norm.
fn raw_coefficients(spec: &CoherentSpec, levels: usize) -> (Vec<Complex64>, f64) {
    let modulus_sq = spec.eta.norm_sqr();
    let mut coeffs = Vec::with_capacity(levels);
    let mut c = Complex64::new((1.0 - modulus_sq).powf(0.5 * (1.0 + spec.s)), 0.0);
    for k in 0..levels {
        coeffs.push(c);
        let kf = k as f64;
        c *= spec.eta * ((kf + spec.s + 1.0) / (kf + 1.0)).sqrt();
    }
    let norm_sq = coeffs.iter().map(|c| c.norm_sqr()).sum();
    (coeffs, norm_sq)
}

pub fn coherent_coefficients(spec: &CoherentSpec, n_max: usize) -> Result<StateVector> {
    if !(spec.eta.norm() < 1.0) {
        return Err(Error::InvalidCoherentState(format!("|eta| = {} must be < 1", spec.eta.norm())));
    }
    let (coeffs, norm_sq) = raw_coefficients(spec, n_max + 1);
    let leakage = (1.0 - norm_sq).max(0.0);
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::ExcessiveTruncation { leakage, limit: LEAKAGE_LIMIT });
    }
    let norm = norm_sq.sqrt();
    Ok(StateVector { coeffs: coeffs.into_iter().map(|c| c / norm).collect(), leakage })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    pub mean: f64,
    pub most_probable: usize,
}

pub fn mean_level(coeffs: &[Complex64]) -> LevelStats {
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let mean = coeffs.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()).sum::<f64>() / total;
    let most_probable = coeffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    LevelStats { mean, most_probable }
}
