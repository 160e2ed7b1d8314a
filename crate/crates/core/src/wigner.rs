//! Wigner phase-space distribution of bound-basis density matrices, and the
//! peak and lobe measurements taken on it.
//!
//! `W(x,p) = (r0/2π) ∫ ⟨x - x'/2|ρ|x + x'/2⟩ e^{i x' p} dx'` with
//! `⟨x|ρ|x'⟩ = Σ ρ_mn ψ_m(x) ψ_n(x')`. Each x-row is one inverse FFT over a
//! uniform `x'` grid whose spacing is tied to the requested momentum step, so
//! the transform lands exactly on the momentum axis.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::basis::BoundBasis;
use crate::open_system::DensityMatrix;
use crate::{Error, Result};

/// Largest allowed spacing of the `x'` integration grid.
const MAX_COHERENCE_STEP: f64 = 0.02;
/// `|⟨x - x'/2|ρ|x + x'/2⟩|` must fall below this at the ends of the `x'` range.
const ENDPOINT_TOLERANCE: f64 = 1e-12;
const MAX_HALF_WIDTH: f64 = 16.0;
pub const COVERAGE_WARNING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
    /// Starting half-width of the `x'` range; doubled until the integrand
    /// vanishes at its ends.
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { x_min: -0.4, x_max: 0.8, nx: 256, p_min: -12.0, p_max: 12.0, np: 256, half_width: 1.2 }
    }
}

impl GridSpec {
    /// Grid wide enough to hold the whole packet of the HI `n̄ ≈ 4` states,
    /// at the default cell size (Δx = 0.005, Δp = 0.1).
    pub fn covering() -> Self {
        Self { x_min: -0.5, x_max: 0.9, nx: 281, p_min: -50.0, p_max: 50.0, np: 1001, half_width: 1.2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2x2 points, got {}x{}", self.nx, self.np)));
        }
        if !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::InvalidGrid("axis ranges must be increasing".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::InvalidGrid("x' half-width must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridMeta {
    pub time: f64,
    pub delta: f64,
    /// Temperature as given in the run configuration (see the unit in the
    /// manifest).
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(x_i, p_j)`.
    pub values: DMatrix<f64>,
    pub meta: GridMeta,
    /// Largest imaginary part left by the transform.
    pub imag_residual: f64,
    /// Half-width of the `x'` range actually used.
    pub half_width: f64,
}

impl WignerGrid {
    pub fn dx(&self) -> f64 {
        self.x_axis[1] - self.x_axis[0]
    }

    pub fn dp(&self) -> f64 {
        self.p_axis[1] - self.p_axis[0]
    }

    /// `ΣΣ W Δx Δp`.
    pub fn normalization(&self) -> f64 {
        self.values.sum() * self.dx() * self.dp()
    }

    /// `Σ_p W Δp` at each `x`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values.row_iter().map(|row| row.sum() * dp).collect()
    }

    /// `2π ΣΣ W² Δx Δp`, equal to `Tr ρ²` when the grid covers the state.
    pub fn phase_space_purity(&self) -> f64 {
        2.0 * PI * self.values.iter().map(|w| w * w).sum::<f64>() * self.dx() * self.dp()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    fn index_range(axis: &[f64], lo: f64, hi: f64) -> Option<(usize, usize)> {
        let first = axis.iter().position(|&v| v >= lo)?;
        let last = axis.iter().rposition(|&v| v <= hi)?;
        (first <= last).then_some((first, last))
    }

    /// Catmull–Rom bicubic interpolation; clamps at the grid edges.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let (nx, np) = (self.x_axis.len(), self.p_axis.len());
        let fx = ((x - self.x_axis[0]) / self.dx()).clamp(0.0, (nx - 1) as f64);
        let fp = ((p - self.p_axis[0]) / self.dp()).clamp(0.0, (np - 1) as f64);
        let (i0, j0) = ((fx.floor() as usize).min(nx - 2), (fp.floor() as usize).min(np - 2));
        let (tx, tp) = (fx - i0 as f64, fp - j0 as f64);
        let at = |i: isize, j: isize| {
            let ii = (i0 as isize + i).clamp(0, nx as isize - 1) as usize;
            let jj = (j0 as isize + j).clamp(0, np as isize - 1) as usize;
            self.values[(ii, jj)]
        };
        let mut rows = [0.0; 4];
        for (k, row) in rows.iter_mut().enumerate() {
            let i = k as isize - 1;
            *row = catmull_rom(at(i, -1), at(i, 0), at(i, 1), at(i, 2), tp);
        }
        catmull_rom(rows[0], rows[1], rows[2], rows[3], tx)
    }
}

fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * (p1 - p2) + p3 - p0) * t3)
}

/// `⟨x|ρ|x'⟩` with real eigenfunctions.
pub fn density_position(rho: &DensityMatrix, basis: &BoundBasis, x: f64, xp: f64) -> Complex64 {
    let n = basis.len();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    basis.eigenfunctions_at(x, &mut u);
    basis.eigenfunctions_at(xp, &mut v);
    sandwich(rho.matrix(), &u, &v)
}

fn sandwich(rho: &DMatrix<Complex64>, u: &[f64], v: &[f64]) -> Complex64 {
    let n = u.len();
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..n {
        if v[k] == 0.0 {
            continue;
        }
        let mut col = Complex64::new(0.0, 0.0);
        for m in 0..n {
            col += rho[(m, k)] * u[m];
        }
        total += col * v[k];
    }
    total
}

pub fn wigner_transform(
    rho: &DensityMatrix,
    basis: &BoundBasis,
    spec: &GridSpec,
    meta: GridMeta,
) -> Result<WignerGrid> {
    spec.validate()?;
    if rho.dim() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), found: rho.dim() });
    }
    let x_axis: Vec<f64> = (0..spec.nx).map(|i| spec.x_min + i as f64 * spec.dx()).collect();
    let p_axis: Vec<f64> = (0..spec.np).map(|j| spec.p_min + j as f64 * spec.dp()).collect();
    let dp = spec.dp();

    let endpoint = |hw: f64| {
        x_axis
            .iter()
            .map(|&x| density_position(rho, basis, x - 0.5 * hw, x + 0.5 * hw).norm())
            .fold(0.0, f64::max)
    };
    let mut half_width = spec.half_width;
    while endpoint(half_width) > ENDPOINT_TOLERANCE && half_width < MAX_HALF_WIDTH {
        half_width *= 2.0;
    }

    // N dx' dp = 2π, dx' small enough, and the x' range fits inside N.
    let mut fft_len = spec.np.next_power_of_two();
    let step = loop {
        let step = 2.0 * PI / (fft_len as f64 * dp);
        let reach = (half_width / step).ceil() as usize;
        if step <= MAX_COHERENCE_STEP && 2 * reach < fft_len {
            break step;
        }
        fft_len *= 2;
    };
    let reach = (half_width / step).ceil() as usize;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(fft_len);
    let scale = basis.params().equilibrium_distance / (2.0 * PI) * step;
    let levels = basis.len();

    let rows: Vec<(Vec<f64>, f64)> = x_axis
        .par_iter()
        .map(|&x| {
            let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
            let mut u = vec![0.0; levels];
            let mut v = vec![0.0; levels];
            for l in 0..=reach {
                let shift = l as f64 * step;
                basis.eigenfunctions_at(x - 0.5 * shift, &mut u);
                basis.eigenfunctions_at(x + 0.5 * shift, &mut v);
                let value = sandwich(rho.matrix(), &u, &v);
                let chirp = Complex64::from_polar(1.0, shift * spec.p_min);
                buf[l] = value * chirp;
                if l > 0 {
                    // ⟨x + s/2|ρ|x - s/2⟩ = conj(⟨x - s/2|ρ|x + s/2⟩)
                    buf[fft_len - l] = value.conj() * chirp.conj();
                }
            }
            fft.process(&mut buf);
            let mut imag: f64 = 0.0;
            let row = buf[..spec.np]
                .iter()
                .map(|c| {
                    imag = imag.max((c.im * scale).abs());
                    c.re * scale
                })
                .collect();
            (row, imag)
        })
        .collect();

    let mut values = DMatrix::zeros(spec.nx, spec.np);
    let mut imag_residual: f64 = 0.0;
    for (i, (row, imag)) in rows.into_iter().enumerate() {
        imag_residual = imag_residual.max(imag);
        for (j, w) in row.into_iter().enumerate() {
            values[(i, j)] = w;
        }
    }
    let grid = WignerGrid { x_axis, p_axis, values, meta, imag_residual, half_width };
    let norm = grid.normalization();
    if (norm - 1.0).abs() > COVERAGE_WARNING {
        log::warn!("Wigner grid covers only {norm:.4} of the state; widen the phase-space window");
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Maximum,
    Minimum,
}

impl Extremum {
    fn sign_name(self) -> &'static str {
        match self {
            Extremum::Maximum => "positive",
            Extremum::Minimum => "negative",
        }
    }
}

/// Search window for one peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub x: f64,
    pub p: f64,
    pub half_width_x: f64,
    pub half_width_p: f64,
    pub kind: Extremum,
}

impl Probe {
    /// 0.1 × 2.0 window centred on `(x, p)`.
    pub fn new(name: &str, x: f64, p: f64, kind: Extremum) -> Self {
        Self { name: name.to_string(), x, p, half_width_x: 0.05, half_width_p: 1.0, kind }
    }

    pub fn recentered(&self, peak: &Peak) -> Self {
        Self { x: peak.x, p: peak.p, ..self.clone() }
    }
}

/// Location of the sub-Planck negative peak at one eighth of the revival time
/// for HI.
pub const HI_CENTRAL_PROBE: (f64, f64) = (0.077, -6.064);

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub left: Probe,
    pub right: Probe,
    pub central: Probe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Signed value of `W` at the refined extremum.
    pub amplitude: f64,
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub left_cs: Option<Peak>,
    pub right_cs: Option<Peak>,
    pub central_negative: Option<Peak>,
}

/// Strongest local extremum of the expected sign inside the probe window,
/// refined to sub-cell accuracy on the bicubic interpolant.
pub fn find_peak(w: &WignerGrid, probe: &Probe) -> Result<Peak> {
    let not_found = || Error::PeakNotFound { probe: probe.name.clone(), sign: probe.kind.sign_name() };
    let (i0, i1) = WignerGrid::index_range(&w.x_axis, probe.x - probe.half_width_x, probe.x + probe.half_width_x)
        .ok_or_else(not_found)?;
    let (j0, j1) = WignerGrid::index_range(&w.p_axis, probe.p - probe.half_width_p, probe.p + probe.half_width_p)
        .ok_or_else(not_found)?;
    let (nx, np) = w.values.shape();
    let better = |a: f64, b: f64| match probe.kind {
        Extremum::Maximum => a > b,
        Extremum::Minimum => a < b,
    };
    let mut best: Option<(usize, usize, f64)> = None;
    for i in i0.max(1)..=i1.min(nx - 2) {
        for j in j0.max(1)..=j1.min(np - 2) {
            let v = w.values[(i, j)];
            let signed_ok = match probe.kind {
                Extremum::Maximum => v > 0.0,
                Extremum::Minimum => v < 0.0,
            };
            if !signed_ok {
                continue;
            }
            let is_extremum = (-1isize..=1).all(|di| {
                (-1isize..=1).all(|dj| {
                    (di == 0 && dj == 0)
                        || !better(w.values[((i as isize + di) as usize, (j as isize + dj) as usize)], v)
                })
            });
            if is_extremum && best.is_none_or(|(_, _, b)| better(v, b)) {
                best = Some((i, j, v));
            }
        }
    }
    let (i, j, v) = best.ok_or_else(not_found)?;
    let mut peak = Peak { amplitude: v, x: w.x_axis[i], p: w.p_axis[j] };
    let (dx, dp) = (w.dx(), w.dp());
    const SUB: usize = 40;
    for a in 0..=SUB {
        for b in 0..=SUB {
            let x = w.x_axis[i] + dx * (a as f64 / SUB as f64 * 2.0 - 1.0);
            let p = w.p_axis[j] + dp * (b as f64 / SUB as f64 * 2.0 - 1.0);
            let value = w.interpolate(x, p);
            if better(value, peak.amplitude) {
                peak = Peak { amplitude: value, x, p };
            }
        }
    }
    Ok(peak)
}

pub fn peak_metrics(w: &WignerGrid, probes: &ProbeSet) -> PeakReport {
    PeakReport {
        left_cs: find_peak(w, &probes.left).ok(),
        right_cs: find_peak(w, &probes.right).ok(),
        central_negative: find_peak(w, &probes.central).ok(),
    }
}

/// Position width `1/sqrt(μ r0² ω₀₁)` of the ground state in `x`.
pub fn vacuum_width(basis: &BoundBasis) -> f64 {
    let p = basis.params();
    1.0 / (p.reduced_mass * p.equilibrium_distance.powi(2) * basis.fundamental_frequency()).sqrt()
}

/// Separable Gaussian blur with standard deviations given in axis units;
/// values outside the grid count as zero.
pub fn gaussian_smooth(w: &WignerGrid, sigma_x: f64, sigma_p: f64) -> DMatrix<f64> {
    fn kernel(sigma_cells: f64) -> Vec<f64> {
        let radius = (4.0 * sigma_cells).ceil() as isize;
        let raw: Vec<f64> =
            (-radius..=radius).map(|k| (-0.5 * (k as f64 / sigma_cells).powi(2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
    let kx = kernel(sigma_x / w.dx());
    let kp = kernel(sigma_p / w.dp());
    let (nx, np) = w.values.shape();
    let (rx, rp) = ((kx.len() / 2) as isize, (kp.len() / 2) as isize);
    let mut tmp = DMatrix::zeros(nx, np);
    for i in 0..nx {
        for j in 0..np {
            let mut acc = 0.0;
            for (t, k) in kp.iter().enumerate() {
                let jj = j as isize + t as isize - rp;
                if jj >= 0 && (jj as usize) < np {
                    acc += k * w.values[(i, jj as usize)];
                }
            }
            tmp[(i, j)] = acc;
        }
    }
    let mut out = DMatrix::zeros(nx, np);
    for i in 0..nx {
        for j in 0..np {
            let mut acc = 0.0;
            for (t, k) in kx.iter().enumerate() {
                let ii = i as isize + t as isize - rx;
                if ii >= 0 && (ii as usize) < nx {
                    acc += k * tmp[(ii as usize, j)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe {
    pub x: f64,
    pub p: f64,
    /// Height of the coarse-grained distribution at the lobe centre.
    pub height: f64,
}

/// Coherent-state lobes of a Wigner grid.
///
/// `W` is blurred with the vacuum Gaussian (widths `σ/√2` in `x`, `1/(σ√2)` in
/// `p`), which washes out sub-Planck fringes and leaves one smooth hump per
/// coherent component. Lobes are the connected components of the blurred
/// grid above `threshold` times its maximum.
pub fn dominant_lobes(w: &WignerGrid, vacuum_width: f64, threshold: f64) -> Vec<Lobe> {
    let smooth = gaussian_smooth(w, vacuum_width / 2f64.sqrt(), 1.0 / (vacuum_width * 2f64.sqrt()));
    let level = threshold * smooth.max();
    let (nx, np) = smooth.shape();
    let mut label = vec![usize::MAX; nx * np];
    let mut lobes = Vec::new();
    for start in 0..nx * np {
        if label[start] != usize::MAX || smooth[(start / np, start % np)] < level {
            continue;
        }
        let id = lobes.len();
        let mut stack = vec![start];
        label[start] = id;
        let mut top = (start / np, start % np, smooth[(start / np, start % np)]);
        while let Some(cell) = stack.pop() {
            let (i, j) = (cell / np, cell % np);
            let v = smooth[(i, j)];
            if v > top.2 {
                top = (i, j, v);
            }
            let neighbours = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            for (a, b) in neighbours {
                if a < nx && b < np {
                    let idx = a * np + b;
                    if label[idx] == usize::MAX && smooth[(a, b)] >= level {
                        label[idx] = id;
                        stack.push(idx);
                    }
                }
            }
        }
        lobes.push(Lobe { x: w.x_axis[top.0], p: w.p_axis[top.1], height: top.2 });
    }
    lobes
}

/// Default superlevel fraction for [`dominant_lobes`].
pub const LOBE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct Morphology {
    pub lobes: Vec<Lobe>,
    /// Mean position of the lobes.
    pub centroid: (f64, f64),
    /// Deepest negative local minimum of `W` within one vacuum width of the
    /// centroid, if any.
    pub central_minimum: Option<Peak>,
}

impl Morphology {
    pub fn has_central_interference(&self, w: &WignerGrid) -> bool {
        self.central_minimum.is_some_and(|m| m.amplitude < -0.05 * w.max())
    }
}

pub fn morphology(w: &WignerGrid, vacuum_width: f64) -> Morphology {
    let lobes = dominant_lobes(w, vacuum_width, LOBE_THRESHOLD);
    let count = lobes.len().max(1) as f64;
    let centroid = (
        lobes.iter().map(|l| l.x).sum::<f64>() / count,
        lobes.iter().map(|l| l.p).sum::<f64>() / count,
    );
    let (nx, np) = w.values.shape();
    let mut best: Option<Peak> = None;
    for i in 1..nx - 1 {
        for j in 1..np - 1 {
            let v = w.values[(i, j)];
            if v >= 0.0 {
                continue;
            }
            let scaled = ((w.x_axis[i] - centroid.0) / vacuum_width).hypot((w.p_axis[j] - centroid.1) * vacuum_width);
            if scaled > 1.0 {
                continue;
            }
            let is_min = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| w.values[(a, b)] >= v));
            if is_min && best.is_none_or(|b| v < b.amplitude) {
                best = Some(Peak { amplitude: v, x: w.x_axis[i], p: w.p_axis[j] });
            }
        }
    }
    Morphology { lobes, centroid, central_minimum: best }
}

/// Highest positive local maximum of `W` within one vacuum width of `lobe`.
fn highest_maximum_near(w: &WignerGrid, lobe: &Lobe, vacuum_width: f64) -> Option<(usize, usize)> {
    let (nx, np) = w.values.shape();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 1..nx - 1 {
        if ((w.x_axis[i] - lobe.x) / vacuum_width).abs() > 1.0 {
            continue;
        }
        for j in 1..np - 1 {
            let v = w.values[(i, j)];
            let scaled = ((w.x_axis[i] - lobe.x) / vacuum_width).hypot((w.p_axis[j] - lobe.p) * vacuum_width);
            if v <= 0.0 || scaled > 1.0 || best.is_some_and(|b| b.2 >= v) {
                continue;
            }
            if (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| w.values[(a, b)] <= v)) {
                best = Some((i, j, v));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Steepest ascent on `W` from the node nearest `(x, p)` to a local maximum.
fn climb(w: &WignerGrid, x: f64, p: f64) -> (usize, usize) {
    let (nx, np) = w.values.shape();
    let mut i = (((x - w.x_axis[0]) / w.dx()).round().max(0.0) as usize).min(nx - 1);
    let mut j = (((p - w.p_axis[0]) / w.dp()).round().max(0.0) as usize).min(np - 1);
    loop {
        let mut best = (i, j, w.values[(i, j)]);
        for a in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
            for b in j.saturating_sub(1)..=(j + 1).min(np - 1) {
                if w.values[(a, b)] > best.2 {
                    best = (a, b, w.values[(a, b)]);
                }
            }
        }
        if (best.0, best.1) == (i, j) {
            return (i, j);
        }
        (i, j) = (best.0, best.1);
    }
}

/// Probes derived from a reference (usually decoherence-free) grid: the left-
/// and rightmost lobes, and either the given central location or the
/// morphology's central minimum.
pub fn locate_probes(reference: &WignerGrid, vacuum_width: f64, central: Option<(f64, f64)>) -> Result<ProbeSet> {
    let shape = morphology(reference, vacuum_width);
    let by_x = |a: &&Lobe, b: &&Lobe| a.x.total_cmp(&b.x);
    let left_lobe = shape.lobes.iter().min_by(by_x).ok_or_else(|| Error::PeakNotFound {
        probe: "left".into(),
        sign: "positive",
    })?;
    let right_lobe = shape.lobes.iter().max_by(by_x).expect("non-empty");
    let refine = |name: &str, lobe: &Lobe| {
        let (i, j) = highest_maximum_near(reference, lobe, vacuum_width).unwrap_or_else(|| climb(reference, lobe.x, lobe.p));
        let probe = Probe::new(name, reference.x_axis[i], reference.p_axis[j], Extremum::Maximum);
        find_peak(reference, &probe).map(|peak| probe.recentered(&peak))
    };
    let left = refine("left", left_lobe)?;
    let right = refine("right", right_lobe)?;
    let central = match central {
        Some((x, p)) => Probe::new("central", x, p, Extremum::Minimum),
        None => {
            let m = shape.central_minimum.ok_or_else(|| Error::PeakNotFound {
                probe: "central".into(),
                sign: "negative",
            })?;
            Probe::new("central", m.x, m.p, Extremum::Minimum)
        }
    };
    Ok(ProbeSet { left, right, central })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> WignerGrid {
        let x_axis: Vec<f64> = (0..121).map(|i| -0.3 + 0.005 * i as f64).collect();
        let p_axis: Vec<f64> = (0..201).map(|j| -10.0 + 0.1 * j as f64).collect();
        let values = DMatrix::from_fn(121, 201, |i, j| f(x_axis[i], p_axis[j]));
        WignerGrid { x_axis, p_axis, values, meta: GridMeta::default(), imag_residual: 0.0, half_width: 1.0 }
    }

    #[test]
    fn inserted_dip_is_recovered() {
        let (cx, cp) = (0.1, -6.0);
        let grid = synthetic(|x, p| 0.05 - 0.3 * (-((x - cx) / 0.02).powi(2) - ((p - cp) / 0.4).powi(2)).exp());
        let probe = Probe::new("central", 0.09, -5.7, Extremum::Minimum);
        let peak = find_peak(&grid, &probe).unwrap();
        assert!((peak.amplitude - (0.05 - 0.3)).abs() < 1e-6, "{peak:?}");
        assert!((peak.x - cx).abs() < 1e-3 && (peak.p - cp).abs() < 1e-2);

        let pure = synthetic(|x, p| -0.3 * (-((x - cx) / 0.02).powi(2) - ((p - cp) / 0.4).powi(2)).exp());
        let peak = find_peak(&pure, &probe).unwrap();
        assert!((peak.amplitude + 0.3).abs() < 1e-6);
    }

    #[test]
    fn missing_sign_reports_not_found() {
        let grid = synthetic(|x, p| (-(x / 0.1).powi(2) - (p / 3.0).powi(2)).exp());
        let probe = Probe::new("central", 0.0, 0.0, Extremum::Minimum);
        assert!(matches!(find_peak(&grid, &probe), Err(Error::PeakNotFound { .. })));
        let off = Probe::new("left", 5.0, 0.0, Extremum::Maximum);
        assert!(find_peak(&grid, &off).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_smooth_fields() {
        let grid = synthetic(|x, p| (3.0 * x).sin() * (0.2 * p).cos());
        assert!((grid.interpolate(grid.x_axis[7], grid.p_axis[11]) - grid.values[(7, 11)]).abs() < 1e-14);
        let v = grid.interpolate(0.0123, 1.234);
        assert!((v - (3.0f64 * 0.0123).sin() * (0.2f64 * 1.234).cos()).abs() < 1e-6);
    }

    #[test]
    fn lobes_of_two_gaussians() {
        let g = |x: f64, p: f64, x0: f64, p0: f64| (-((x - x0) / 0.05).powi(2) - ((p - p0) / 1.5).powi(2)).exp();
        let grid = synthetic(|x, p| g(x, p, -0.15, 0.0) + 0.9 * g(x, p, 0.2, 3.0) - 0.5 * g(x, p, 0.02, 1.5));
        let lobes = dominant_lobes(&grid, 0.05, 0.5);
        assert_eq!(lobes.len(), 2, "{lobes:?}");
    }

    #[test]
    fn default_grid_cell_size() {
        let spec = GridSpec::default();
        assert!((spec.dx() - 0.0047).abs() < 1e-4);
        assert!((spec.dp() - 0.094).abs() < 1e-3);
        let wide = GridSpec::covering();
        assert!((wide.dx() - 0.005).abs() < 1e-12 && (wide.dp() - 0.1).abs() < 1e-12);
        assert!(GridSpec { nx: 1, ..spec }.validate().is_err());
    }
}
