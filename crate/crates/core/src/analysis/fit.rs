//! Nonlinear least-squares fits of peak-decay series.
//!
//! Gauss–Newton with a Levenberg–Marquardt fallback whenever a full step
//! fails to lower the residual. Deterministic: no restarts.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const RELATIVE_TOLERANCE: f64 = 1e-8;
/// A fit is accepted when its rms residual is below this fraction of the
/// amplitude range.
pub const ACCEPTANCE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `A e^{-c x}`, params `[A, c]`.
    Exponential,
    /// `a exp(-b / (e^{T_c/T} - 1))`, params `[a, b, T_c]`.
    Bose,
}

impl DecayModel {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            DecayModel::Exponential => &["A", "c"],
            DecayModel::Bose => &["a", "b", "T_c"],
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            DecayModel::Exponential => 5,
            DecayModel::Bose => 6,
        }
    }

    pub fn evaluate(self, params: &[f64], x: f64) -> f64 {
        self.value_and_gradient(params, x).0
    }

    fn value_and_gradient(self, params: &[f64], x: f64) -> (f64, Vec<f64>) {
        match self {
            DecayModel::Exponential => {
                let (a, c) = (params[0], params[1]);
                let e = (-c * x).exp();
                (a * e, vec![e, -a * x * e])
            }
            DecayModel::Bose => {
                let (a, b, tc) = (params[0], params[1], params[2]);
                let n = bose_number(tc, x);
                let f = a * (-b * n).exp();
                // dn/dT_c = -n (n + 1) / T
                let dn = -n * (n + 1.0) / x;
                (f, vec![f / a, -n * f, -b * f * dn])
            }
        }
    }
}

/// `1 / (e^{T_c/T} - 1)`.
fn bose_number(tc: f64, t: f64) -> f64 {
    1.0 / (tc / t).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub params: Vec<f64>,
    pub rms_residual: f64,
    pub amplitude_range: f64,
    pub iterations: usize,
}

impl DecayFit {
    pub fn accepted(&self) -> bool {
        self.rms_residual < ACCEPTANCE_FRACTION * self.amplitude_range
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.model.evaluate(&self.params, x)
    }

    pub fn named_params(&self) -> Vec<(&'static str, f64)> {
        self.model.param_names().iter().copied().zip(self.params.iter().copied()).collect()
    }
}

fn check_series(model: DecayModel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < model.min_points() {
        return Err(Error::InsufficientData { got: x.len(), need: model.min_points() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite value in series".into()));
    }
    if y.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateData("amplitudes must be positive".into()));
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-12 * hi {
        return Err(Error::DegenerateData("series is constant".into()));
    }
    Ok(hi - lo)
}

/// Fit `A e^{-c x}`. Pass δ in units of 10³ a.u. so `c` is per 10³ a.u.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> Result<DecayFit> {
    let range = check_series(DecayModel::Exponential, x, y)?;
    // ln y = ln A - c x
    let n = x.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let start = vec![(my - slope * mx).exp(), -slope];
    let (params, iterations) = least_squares(DecayModel::Exponential, x, y, start)?;
    Ok(finish(DecayModel::Exponential, x, y, params, iterations, range))
}

/// Fit `a exp(-b / (e^{T_c/T} - 1))` to a temperature series.
pub fn fit_bose(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    let range = check_series(DecayModel::Bose, t, y)?;
    if t.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateData("temperatures must be positive".into()));
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&i, &j| t[i].total_cmp(&t[j]));
    let ts: Vec<f64> = order.iter().map(|&i| t[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let tc = max_curvature_point(&ts, &ys);
    let (first, last) = (0, ts.len() - 1);
    let dn = bose_number(tc, ts[last]) - bose_number(tc, ts[first]);
    let b = (ys[first] / ys[last]).ln() / dn;
    let a = ys[first] * (b * bose_number(tc, ts[first])).exp();
    let (params, iterations) = least_squares(DecayModel::Bose, &ts, &ys, vec![a, b, tc])?;
    if !(params[2] > ts[first] && params[2] < ts[last]) {
        return Err(Error::DegenerateData(format!(
            "fitted T_c = {} outside the sampled range [{}, {}]",
            params[2], ts[first], ts[last]
        )));
    }
    Ok(finish(DecayModel::Bose, &ts, &ys, params, iterations, range))
}

/// Interior sample of largest curvature of the curve `(x, y)`, both axes
/// rescaled to `[0, 1]`.
fn max_curvature_point(x: &[f64], y: &[f64]) -> f64 {
    let (x0, x1) = (x[0], x[x.len() - 1]);
    let (ylo, yhi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let u: Vec<f64> = x.iter().map(|v| (v - x0) / (x1 - x0)).collect();
    let w: Vec<f64> = y.iter().map(|v| (v - ylo) / (yhi - ylo)).collect();
    let mut best = (x[1], f64::NEG_INFINITY);
    for i in 1..x.len() - 1 {
        let (h0, h1) = (u[i] - u[i - 1], u[i + 1] - u[i]);
        if h0 <= 0.0 || h1 <= 0.0 {
            continue;
        }
        let d1 = (w[i + 1] - w[i - 1]) / (h0 + h1);
        let d2 = 2.0 * ((w[i + 1] - w[i]) / h1 - (w[i] - w[i - 1]) / h0) / (h0 + h1);
        let kappa = d2.abs() / (1.0 + d1 * d1).powf(1.5);
        if kappa > best.1 {
            best = (x[i], kappa);
        }
    }
    best.0
}

fn finish(model: DecayModel, x: &[f64], y: &[f64], params: Vec<f64>, iterations: usize, range: f64) -> DecayFit {
    let sse = sum_squares(model, x, y, &params);
    DecayFit { model, rms_residual: (sse / x.len() as f64).sqrt(), params, amplitude_range: range, iterations }
}

fn sum_squares(model: DecayModel, x: &[f64], y: &[f64], params: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (yi - model.evaluate(params, xi)).powi(2)).sum()
}

fn admissible(model: DecayModel, params: &[f64]) -> bool {
    params.iter().all(|v| v.is_finite())
        && match model {
            DecayModel::Exponential => true,
            DecayModel::Bose => params[0] > 0.0 && params[2] > 0.0,
        }
}

fn least_squares(model: DecayModel, x: &[f64], y: &[f64], start: Vec<f64>) -> Result<(Vec<f64>, usize)> {
    let k = start.len();
    let m = x.len();
    let mut params = start;
    if !admissible(model, &params) {
        return Err(Error::FitDiverged { iterations: 0 });
    }
    let mut sse = sum_squares(model, x, y, &params);
    let mut damping = 0.0;
    for iteration in 1..=MAX_ITERATIONS {
        let mut jac = DMatrix::zeros(m, k);
        let mut resid = DVector::zeros(m);
        for i in 0..m {
            let (f, grad) = model.value_and_gradient(&params, x[i]);
            resid[i] = y[i] - f;
            for j in 0..k {
                jac[(i, j)] = grad[j];
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &resid;
        let mut accepted = None;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for j in 0..k {
                lhs[(j, j)] += damping * jtj[(j, j)].max(1e-300);
            }
            let step = match lhs.cholesky() {
                Some(chol) => chol.solve(&jtr),
                None => {
                    damping = if damping == 0.0 { 1e-3 } else { damping * 10.0 };
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            let small = step.iter().zip(&params).all(|(d, p)| d.abs() <= RELATIVE_TOLERANCE * p.abs().max(1e-300));
            if admissible(model, &trial) {
                let trial_sse = sum_squares(model, x, y, &trial);
                if trial_sse <= sse {
                    accepted = Some((trial, trial_sse, small));
                    break;
                }
                if small {
                    // at the minimum to rounding
                    return Ok((params, iteration));
                }
            }
            damping = if damping == 0.0 { 1e-3 } else { damping * 10.0 };
        }
        let Some((trial, trial_sse, small)) = accepted else {
            return Err(Error::FitDiverged { iterations: iteration });
        };
        params = trial;
        sse = trial_sse;
        damping = if damping > 0.0 { damping / 10.0 } else { 0.0 };
        if damping < 1e-12 {
            damping = 0.0;
        }
        if small {
            return Ok((params, iteration));
        }
    }
    Err(Error::FitDiverged { iterations: MAX_ITERATIONS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_recovered() {
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * (-0.5 * v).exp()).collect();
        let fit = fit_exponential(&x, &y).unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-8 && (fit.params[1] - 0.5).abs() < 1e-8, "{fit:?}");
        assert!(fit.accepted());
    }

    #[test]
    fn exact_bose_recovered() {
        let t: Vec<f64> = (0..12).map(|i| 0.06688 * 200f64.powf(i as f64 / 11.0)).collect();
        let truth = [0.58, 0.05, 0.6688];
        let y: Vec<f64> = t.iter().map(|&v| DecayModel::Bose.evaluate(&truth, v)).collect();
        let fit = fit_bose(&t, &y).unwrap();
        for (p, q) in fit.params.iter().zip(truth) {
            assert!((p / q - 1.0).abs() < 1e-6, "{fit:?}");
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(fit_exponential(&[0.0, 1.0], &[1.0, 0.5]), Err(Error::InsufficientData { got: 2, need: 5 })));
        assert!(matches!(fit_bose(&[1.0; 5], &[1.0; 5]), Err(Error::InsufficientData { got: 5, need: 6 })));
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(fit_bose(&x.map(|v| v + 1.0), &[0.3; 6]), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_exponential(&x, &[1.0, 0.5, -0.1, 0.1, 0.1, 0.1]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn bose_gradient_matches_finite_difference() {
        let p = [0.5, 0.2, 0.7];
        for t in [0.1, 0.7, 5.0] {
            let (_, g) = DecayModel::Bose.value_and_gradient(&p, t);
            for j in 0..3 {
                let h = 1e-6 * p[j];
                let mut up = p;
                let mut dn = p;
                up[j] += h;
                dn[j] -= h;
                let fd = (DecayModel::Bose.evaluate(&up, t) - DecayModel::Bose.evaluate(&dn, t)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-7 * (1.0 + g[j].abs()), "t={t} j={j}: {fd} vs {}", g[j]);
            }
        }
    }
}
