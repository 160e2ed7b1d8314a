//! Revival time, δ- and T-sweeps of the phase-space peaks, and decay fits.

pub mod fit;

use rayon::prelude::*;

pub use fit::{fit_bose, fit_exponential, DecayFit, DecayModel};

use crate::basis::BoundBasis;
use crate::coherent::{coherent_coefficients, CoherentSpec, StateVector};
use crate::open_system::{unitary_evolve, BathSpec, DensityMatrix, EvolveOptions, OpenSystem, Snapshot, Temperature};
use crate::wigner::{
    locate_probes, peak_metrics, vacuum_width, wigner_transform, GridMeta, GridSpec, PeakReport, ProbeSet, WignerGrid,
};
use crate::{Error, Result};

/// `4π / |E_{n+1} - 2E_n + E_{n-1}|` at level `nbar`.
pub fn revival_time(basis: &BoundBasis, nbar: usize) -> Result<f64> {
    if nbar < 1 || nbar + 1 > basis.n_max() {
        return Err(Error::IndexOutOfRange { index: nbar, n_max: basis.n_max().saturating_sub(1) });
    }
    let e = basis.energies();
    Ok(4.0 * std::f64::consts::PI / (e[nbar + 1] - 2.0 * e[nbar] + e[nbar - 1]).abs())
}

/// Twelve coupling strengths on `[0, 2.2]×10³` a.u.
pub fn default_delta_grid() -> Vec<f64> {
    (0..12).map(|i| 2200.0 * i as f64 / 11.0).collect()
}

/// Twelve temperatures log-spaced over `[0.1, 20] × 0.6688` plus `10`, all in
/// units of `ħω₀₁`, sorted.
pub fn default_temperature_grid() -> Vec<f64> {
    let (lo, hi) = (0.06688_f64, 13.376_f64);
    let mut grid: Vec<f64> = (0..12).map(|i| lo * (hi / lo).powf(i as f64 / 11.0)).collect();
    grid.push(10.0);
    grid.sort_by(f64::total_cmp);
    grid
}

/// Everything a single trajectory needs apart from the bath.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub basis: BoundBasis,
    pub initial: StateVector,
    /// Snapshot time as a fraction of the revival time.
    pub fraction: f64,
    pub grid: GridSpec,
    /// Overrides the default RK4 step.
    pub dt: Option<f64>,
    /// `nbar` used for the revival time.
    pub revival_level: usize,
}

impl Scenario {
    /// HI packet with mean level 4, snapshot at `T_rev/8`, covering grid.
    pub fn hi_compass() -> Result<Self> {
        let basis = BoundBasis::new(crate::basis::MorseParams::HI)?;
        let spec = CoherentSpec::from_mean_level(4.0, basis.s_values()[0], basis.len())?;
        let initial = coherent_coefficients(&spec, basis.n_max())?;
        Ok(Self { basis, initial, fraction: 0.125, grid: GridSpec::covering(), dt: None, revival_level: 4 })
    }

    pub fn revival_time(&self) -> f64 {
        revival_time(&self.basis, self.revival_level).expect("revival level validated")
    }

    pub fn snapshot_time(&self) -> f64 {
        self.fraction * self.revival_time()
    }

    /// Density matrix at the snapshot time under `bath`.
    pub fn evolve(&self, bath: &BathSpec) -> Result<Snapshot> {
        let system = OpenSystem::new(&self.basis, bath)?;
        let t = self.snapshot_time();
        let dt = self.dt.unwrap_or_else(|| system.default_time_step(self.revival_time()));
        let rho0 = DensityMatrix::from_pure(&self.initial);
        let mut traj = system.evolve(&rho0, &EvolveOptions { dt, t_final: t, snapshot_times: vec![t] })?;
        Ok(traj.snapshots.pop().expect("one snapshot requested"))
    }

    pub fn wigner(&self, rho: &DensityMatrix, meta: GridMeta) -> Result<WignerGrid> {
        wigner_transform(rho, &self.basis, &self.grid, meta)
    }

    /// Decoherence-free grid at the snapshot time, from exact phases.
    pub fn reference_grid(&self) -> Result<WignerGrid> {
        let t = self.snapshot_time();
        let state = unitary_evolve(&self.initial, self.basis.energies(), t);
        self.wigner(&DensityMatrix::from_pure(&state), GridMeta { time: t, ..GridMeta::default() })
    }

    /// Probes located on the reference grid.
    pub fn reference_probes(&self, central: Option<(f64, f64)>) -> Result<ProbeSet> {
        locate_probes(&self.reference_grid()?, vacuum_width(&self.basis), central)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Delta,
    Temperature,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delta => "delta",
            SweepAxis::Temperature => "T",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub report: PeakReport,
    pub purity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub probes: ProbeSet,
    /// Coupling for temperature sweeps, temperature for δ sweeps.
    pub fixed_delta: Option<f64>,
    pub fixed_temperature: Option<Temperature>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Left,
    Right,
    Central,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 3] = [ProbeKind::Left, ProbeKind::Right, ProbeKind::Central];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Left => "left",
            ProbeKind::Right => "right",
            ProbeKind::Central => "central",
        }
    }
}

impl SweepResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Signed amplitudes, `None` where the probe found nothing.
    pub fn series(&self, probe: ProbeKind) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|pt| {
                let peak = match probe {
                    ProbeKind::Left => pt.report.left_cs,
                    ProbeKind::Right => pt.report.right_cs,
                    ProbeKind::Central => pt.report.central_negative,
                };
                peak.map(|p| p.amplitude)
            })
            .collect()
    }

    /// `(axis, |amplitude|)` pairs over the points where the probe succeeded.
    pub fn magnitudes(&self, probe: ProbeKind) -> (Vec<f64>, Vec<f64>) {
        self.points.iter().zip(self.series(probe)).filter_map(|(pt, a)| a.map(|a| (pt.value, a.abs()))).unzip()
    }

    /// Exponential fit of a δ sweep with the axis in 10³ a.u.
    pub fn fit_exponential(&self, probe: ProbeKind) -> Result<DecayFit> {
        let (x, y) = self.magnitudes(probe);
        let x: Vec<f64> = x.into_iter().map(|d| d / 1e3).collect();
        fit_exponential(&x, &y)
    }

    pub fn fit_bose(&self, probe: ProbeKind) -> Result<DecayFit> {
        let (x, y) = self.magnitudes(probe);
        fit_bose(&x, &y)
    }
}

fn check_axis(values: &[f64]) -> Result<()> {
    if values.is_empty() || !values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidSchedule("sweep axis must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

fn run_point(scenario: &Scenario, bath: Result<BathSpec>, probes: &ProbeSet, value: f64, meta: GridMeta) -> SweepPoint {
    let outcome = bath.and_then(|bath| {
        let snap = scenario.evolve(&bath)?;
        let grid = scenario.wigner(&snap.rho, GridMeta { time: snap.time, ..meta })?;
        Ok((peak_metrics(&grid, probes), snap.rho.purity()))
    });
    match outcome {
        Ok((report, purity)) => SweepPoint { value, report, purity: Some(purity), error: None },
        Err(e) => {
            log::warn!("sweep point {value}: {e}");
            SweepPoint {
                value,
                report: PeakReport { left_cs: None, right_cs: None, central_negative: None },
                purity: None,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Peak amplitudes at the snapshot time for each coupling in `deltas`.
pub fn sweep_delta(scenario: &Scenario, deltas: &[f64], temperature: Temperature, probes: &ProbeSet) -> Result<SweepResult> {
    check_axis(deltas)?;
    let points = deltas
        .par_iter()
        .map(|&delta| {
            let meta = GridMeta { time: 0.0, delta, temperature: temperature.value() };
            run_point(scenario, BathSpec::new(delta, temperature), probes, delta, meta)
        })
        .collect();
    Ok(SweepResult {
        axis: SweepAxis::Delta,
        points,
        probes: probes.clone(),
        fixed_delta: None,
        fixed_temperature: Some(temperature),
    })
}

/// Peak amplitudes at the snapshot time for each temperature, in units of
/// `ħω₀₁`.
pub fn sweep_temperature(scenario: &Scenario, delta: f64, temperatures: &[f64], probes: &ProbeSet) -> Result<SweepResult> {
    check_axis(temperatures)?;
    let points = temperatures
        .par_iter()
        .map(|&t| {
            let meta = GridMeta { time: 0.0, delta, temperature: t };
            run_point(scenario, BathSpec::new(delta, Temperature::Fundamental(t)), probes, t, meta)
        })
        .collect();
    Ok(SweepResult { axis: SweepAxis::Temperature, points, probes: probes.clone(), fixed_delta: Some(delta), fixed_temperature: None })
}
