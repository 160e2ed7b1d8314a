//! Finite-difference oracle for the bound states: `-a d²/dx² + V(x)` on a
//! uniform grid with hard walls, eigenvalues by Sturm-sequence bisection,
//! Richardson-extrapolated over grid doublings.
#![allow(dead_code)]

use subplanck::basis::MorseParams;

pub const X_LO: f64 = -0.9;
pub const X_HI: f64 = 63.1;
pub const N0: usize = 16_000;
pub const LEVELS: usize = 4;

pub struct Grid {
    pub h: f64,
    diag: Vec<f64>,
    off: f64,
}

impl Grid {
    pub fn new(p: &MorseParams, n: usize) -> Self {
        let h = (X_HI - X_LO) / n as f64;
        let a = 1.0 / (2.0 * p.reduced_mass * p.equilibrium_distance.powi(2));
        let diag = (1..n)
            .map(|i| {
                let x = X_LO + i as f64 * h;
                let e = (-p.range_parameter * x).exp();
                2.0 * a / (h * h) + p.dissociation_energy * (e * e - 2.0 * e)
            })
            .collect();
        Self { h, diag, off: -a / (h * h) }
    }

    pub fn x(&self, i: usize) -> f64 {
        X_LO + (i + 1) as f64 * self.h
    }

    /// Number of eigenvalues below `lambda`.
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let mut q = 1.0;
        let mut count = 0;
        for (i, d) in self.diag.iter().enumerate() {
            q = d - lambda - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = (-0.2, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-16 * mid.abs() {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for the eigenvalue just above `shift`, by inverse
    /// iteration with the Thomas algorithm; unit norm in `∫ψ² r0 dx`.
    pub fn eigenvector(&self, shift: f64, r0: f64) -> Vec<f64> {
        let n = self.diag.len();
        let mut v = vec![1.0; n];
        for _ in 0..6 {
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            let b0 = self.diag[0] - shift;
            c[0] = self.off / b0;
            d[0] = v[0] / b0;
            for i in 1..n {
                let m = self.diag[i] - shift - self.off * c[i - 1];
                c[i] = self.off / m;
                d[i] = (v[i] - self.off * d[i - 1]) / m;
            }
            v[n - 1] = d[n - 1];
            for i in (0..n - 1).rev() {
                v[i] = d[i] - c[i] * v[i + 1];
            }
            let norm = (v.iter().map(|y| y * y).sum::<f64>() * self.h * r0).sqrt();
            let sign = if v.iter().copied().fold(0.0, |acc: f64, y| if y.abs() > acc.abs() { y } else { acc }) < 0.0 {
                -1.0
            } else {
                1.0
            };
            v.iter_mut().for_each(|y| *y *= sign / norm);
        }
        v
    }
}

/// Repeated Richardson elimination of h², h⁴, h⁶ from values on grids
/// h, h/2, h/4, h/8.
pub fn richardson(values: &[f64]) -> f64 {
    let mut r = values.to_vec();
    for level in 1..r.len() {
        let f = 4f64.powi(level as i32);
        r = r.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    r[0]
}

pub fn grids(p: &MorseParams) -> Vec<Grid> {
    (0..LEVELS).map(|k| Grid::new(p, N0 << k)).collect()
}
