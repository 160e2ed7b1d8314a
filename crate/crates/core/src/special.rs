//! Special functions and quadrature used throughout the crate.

use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on `P_n` from the Tricomi initial
/// guess; accurate to machine precision for the orders used here (≤ 64).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order > 0, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A quadrature rule on the real line given by explicit nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Composite Gauss–Legendre rule over consecutive panels.
    ///
    /// `breaks` are the panel boundaries in increasing order.
    pub fn composite(breaks: &[f64], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn lower(&self) -> f64 {
        self.nodes.first().copied().unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }
}

/// Value of a generalized Laguerre polynomial in scaled form
/// `sign * exp(ln_abs)`, so that large degrees and arguments never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub ln_abs: f64,
    pub sign: f64,
}

impl ScaledValue {
    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

const RESCALE_THRESHOLD: f64 = 1e100;

/// Generalized Laguerre polynomial `L_n^a(z)` by the three-term upward
/// recurrence in `n`, renormalizing the running pair whenever it grows past
/// `1e100`.
pub fn laguerre_scaled(n: usize, a: f64, z: f64) -> ScaledValue {
    let mut prev = 1.0_f64;
    let mut scale = 0.0_f64;
    if n == 0 {
        return ScaledValue { ln_abs: 0.0, sign: 1.0 };
    }
    let mut cur = 1.0 + a - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - z) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            scale += RESCALE_THRESHOLD.ln();
        }
    }
    if cur == 0.0 {
        ScaledValue { ln_abs: f64::NEG_INFINITY, sign: 0.0 }
    } else {
        ScaledValue { ln_abs: cur.abs().ln() + scale, sign: cur.signum() }
    }
}

pub fn laguerre(n: usize, a: f64, z: f64) -> f64 {
    laguerre_scaled(n, a, z).value()
}
