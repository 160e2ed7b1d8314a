//! Command-line front end: `eigen`, `evolve`, `wigner`, `sweep`, `fit`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical failures, 4 when outputs were written but an invariant check
//! failed.

pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

pub use config::{ConfigError, InitialState, RunConfig, TimeValue};

use crate::analysis::{
    default_delta_grid, default_temperature_grid, revival_time, sweep_delta, sweep_temperature, DecayFit, Scenario,
    SweepAxis, SweepResult,
};
use crate::basis::BoundBasis;
use crate::coherent::{coherent_coefficients, mean_level, CoherentSpec, StateVector};
use crate::io;
use crate::open_system::{BathSpec, DensityMatrix, EvolveOptions, OpenSystem, Temperature};
use crate::wigner::{morphology, vacuum_width, wigner_transform, GridMeta, GridSpec, Peak, Probe};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "subplanck", version, about = "Morse wave packets under a super-Ohmic bath: dynamics, Wigner maps, decay fits")]
pub struct Cli {
    /// Molecule preset (HI) used when no config file, or no [molecule] section, is given.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sweeps and Wigner rows.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state energies, position matrix and revival time.
    Eigen,
    /// One trajectory with density-matrix and Wigner snapshots.
    Evolve,
    /// Wigner transform of a stored density matrix (`*_re.csv`, with `*_im.csv` alongside).
    Wigner { rho: PathBuf },
    /// Peak amplitudes across coupling strengths or temperatures.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
    },
    /// Decay-law fit of a sweep table.
    Fit {
        #[arg(long, value_enum)]
        model: Model,
        sweep: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Delta,
    Temperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Exp,
    Bose,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Invariant(m) => write!(f, "invariant check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams { .. }
            | Error::InvalidCoherentState(_)
            | Error::ExcessiveTruncation { .. }
            | Error::InvalidSchedule(_)
            | Error::InvalidGrid(_)
            | Error::Parse(_)
            | Error::NoBoundStates { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(Error::Io(e))
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Fit { model, sweep } => cmd_fit(sweep, *model, &cli.out),
        command => {
            let cfg = load_config(cli)?;
            match command {
                Command::Eigen => cmd_eigen(&cfg, &cli.out),
                Command::Evolve => cmd_evolve(&cfg, &cli.out),
                Command::Wigner { rho } => cmd_wigner(&cfg, rho, &cli.out),
                Command::Sweep { axis } => cmd_sweep(&cfg, *axis, &cli.out),
                Command::Fit { .. } => unreachable!(),
            }
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match (&cli.config, &cli.preset) {
        (Some(path), preset) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(RunConfig::parse(&text, preset.as_deref())?)
        }
        (None, Some(preset)) => Ok(RunConfig::from_preset(preset)?),
        (None, None) => Err(CliError::Config("either --preset or --config is required".into())),
    }
}

fn write_manifest(out: &Path, command: &str, body: Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&body).expect("manifest serializes");
    fs::write(out.join(format!("manifest_{command}.json")), text + "\n")?;
    Ok(())
}

fn molecule_json(cfg: &RunConfig) -> Value {
    let m = &cfg.molecule;
    json!({
        "preset": cfg.preset,
        "D_au": m.dissociation_energy,
        "beta_au": m.range_parameter,
        "r0_au": m.equilibrium_distance,
        "mu_au": m.reduced_mass,
    })
}

fn temperature_json(t: &Temperature) -> Value {
    match t {
        Temperature::Hartree(v) => json!({ "value": v, "unit": "au" }),
        Temperature::Fundamental(v) => json!({ "value": v, "unit": "hw01" }),
    }
}

fn peak_json(p: &Option<Peak>) -> Value {
    match p {
        Some(p) => json!({ "amplitude": p.amplitude, "x": p.x, "p": p.p }),
        None => Value::Null,
    }
}

fn probe_json(p: &Probe) -> Value {
    json!({ "x": p.x, "p": p.p, "half_width_x": p.half_width_x, "half_width_p": p.half_width_p })
}

fn grid_json(g: &GridSpec) -> Value {
    json!({ "x": [g.x_min, g.x_max, g.nx], "p": [g.p_min, g.p_max, g.np], "half_width": g.half_width })
}

pub fn initial_state(cfg: &RunConfig, basis: &BoundBasis) -> Result<StateVector, Error> {
    let s = basis.s_values()[0];
    let spec = match cfg.state {
        InitialState::Alpha(a) => CoherentSpec::from_alpha(Complex64::new(a, 0.0), s)?,
        InitialState::Eta(e) => CoherentSpec::from_eta(Complex64::new(e, 0.0), s)?,
        InitialState::MeanLevel(n) => CoherentSpec::from_mean_level(n, s, basis.len())?,
    };
    coherent_coefficients(&spec, basis.n_max())
}

fn revival_level(basis: &BoundBasis, state: &StateVector) -> usize {
    (mean_level(&state.coeffs).mean.round() as usize).clamp(1, basis.n_max().saturating_sub(1).max(1))
}

fn cmd_eigen(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let basis = BoundBasis::new(cfg.molecule)?;
    let t_rev = revival_time(&basis, 1)?;
    let mut table = String::from("n,energy,s\n");
    for (n, (e, s)) in basis.energies().iter().zip(basis.s_values()).enumerate() {
        table.push_str(&format!("{n},{},{}\n", io::format_number(*e), io::format_number(*s)));
    }
    fs::write(out.join("energies.csv"), table)?;
    let x = basis.position_matrix();
    let mut xm = String::new();
    for row in x.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| io::format_number(*v)).collect();
        xm.push_str(&cells.join(","));
        xm.push('\n');
    }
    fs::write(out.join("position_matrix.csv"), xm)?;
    let residual = basis.orthonormality_residual();
    println!("lambda = {}", io::format_number(basis.lambda()));
    println!("bound_states = {}", basis.len());
    println!("T_rev = {}", io::format_number(t_rev));
    println!("omega01 = {}", io::format_number(basis.fundamental_frequency()));
    write_manifest(
        out,
        "eigen",
        json!({
            "command": "eigen",
            "molecule": molecule_json(cfg),
            "lambda": basis.lambda(),
            "bound_states": basis.len(),
            "revival_time_au": t_rev,
            "omega01_au": basis.fundamental_frequency(),
            "orthonormality_residual": residual,
            "files": ["energies.csv", "position_matrix.csv"],
        }),
    )
}

fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let basis = BoundBasis::new(cfg.molecule)?;
    let state = initial_state(cfg, &basis)?;
    let t_rev = revival_time(&basis, revival_level(&basis, &state))?;
    let bath = BathSpec::new(cfg.delta, cfg.temperature)?;
    let system = OpenSystem::new(&basis, &bath)?;
    let times: Vec<f64> = cfg.snapshots.iter().map(|f| f * t_rev).collect();
    let t_final = cfg.t_final.map(|t| t.in_au(t_rev)).unwrap_or(*times.last().expect("non-empty"));
    let dt = cfg.dt.map(|t| t.in_au(t_rev)).unwrap_or_else(|| system.default_time_step(t_rev));
    let traj = system.evolve(&DensityMatrix::from_pure(&state), &EvolveOptions { dt, t_final, snapshot_times: times })?;
    let grid = cfg.grid.unwrap_or_default();
    let vw = vacuum_width(&basis);
    let temperature = cfg.temperature.value();

    let mut snaps = Vec::new();
    for (k, (snap, fraction)) in traj.snapshots.iter().zip(&cfg.snapshots).enumerate() {
        let meta = io::Metadata::from([
            ("time".to_string(), snap.time),
            ("delta".to_string(), cfg.delta),
            ("T".to_string(), temperature),
            ("dt".to_string(), dt),
            ("trace_residual".to_string(), snap.trace_residual),
        ]);
        io::write_density(&out.join(format!("rho_{k}")), &snap.rho, &meta)?;
        let w = wigner_transform(&snap.rho, &basis, &grid, GridMeta { time: snap.time, delta: cfg.delta, temperature })?;
        io::write_wigner(&out.join(format!("wigner_{k}.csv")), &w)?;
        let shape = morphology(&w, vw);
        snaps.push(json!({
            "index": k,
            "fraction": fraction,
            "time_au": snap.time,
            "trace_residual": snap.trace_residual,
            "hermiticity_residual": snap.hermiticity_residual,
            "min_eigenvalue": snap.min_eigenvalue,
            "purity": snap.rho.purity(),
            "wigner_normalization": w.normalization(),
            "wigner_imag_residual": w.imag_residual,
            "x_prime_half_width": w.half_width,
            "lobes": shape.lobes.iter().map(|l| json!({ "x": l.x, "p": l.p })).collect::<Vec<_>>(),
            "central_interference": shape.has_central_interference(&w),
            "central_minimum": peak_json(&shape.central_minimum),
            "invariants_ok": snap.invariants_hold(),
            "files": [format!("rho_{k}_re.csv"), format!("rho_{k}_im.csv"), format!("wigner_{k}.csv")],
        }));
    }
    let ok = traj.invariants_hold();
    write_manifest(
        out,
        "evolve",
        json!({
            "command": "evolve",
            "molecule": molecule_json(cfg),
            "initial_state": format!("{:?}", cfg.state),
            "initial_leakage": state.leakage,
            "delta_au": cfg.delta,
            "temperature": temperature_json(&cfg.temperature),
            "revival_time_au": t_rev,
            "dt_au": dt,
            "steps": traj.steps,
            "max_trace_drift": traj.max_trace_drift,
            "grid": grid_json(&grid),
            "snapshots": snaps,
            "invariants_ok": ok,
        }),
    )?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("trajectory invariants violated (max trace drift {:e})", traj.max_trace_drift)))
    }
}

fn cmd_wigner(cfg: &RunConfig, rho_path: &Path, out: &Path) -> Result<(), CliError> {
    let name = rho_path.to_string_lossy();
    let stem = name
        .strip_suffix("_re.csv")
        .ok_or_else(|| CliError::Config(format!("expected a '*_re.csv' density file, got {name}")))?;
    let (re, im) = io::density_paths(Path::new(stem));
    let (rho, meta) = io::read_density(&re, &im).map_err(|e| match e {
        Error::Io(err) => CliError::Config(format!("cannot read density matrix: {err}")),
        other => other.into(),
    })?;
    let basis = BoundBasis::new(cfg.molecule)?;
    let grid = cfg.grid.unwrap_or_default();
    let get = |k: &str| meta.get(k).copied().unwrap_or(f64::NAN);
    let w = wigner_transform(&rho, &basis, &grid, GridMeta { time: get("time"), delta: get("delta"), temperature: get("T") })?;
    io::write_wigner(&out.join("wigner.csv"), &w)?;
    let shape = morphology(&w, vacuum_width(&basis));
    write_manifest(
        out,
        "wigner",
        json!({
            "command": "wigner",
            "input": [re.display().to_string(), im.display().to_string()],
            "molecule": molecule_json(cfg),
            "grid": grid_json(&grid),
            "normalization": w.normalization(),
            "phase_space_purity": w.phase_space_purity(),
            "imag_residual": w.imag_residual,
            "lobe_count": shape.lobes.len(),
            "central_minimum": peak_json(&shape.central_minimum),
            "files": ["wigner.csv"],
        }),
    )
}

pub fn scenario(cfg: &RunConfig) -> Result<Scenario, Error> {
    let basis = BoundBasis::new(cfg.molecule)?;
    let initial = initial_state(cfg, &basis)?;
    let level = revival_level(&basis, &initial);
    let t_rev = revival_time(&basis, level)?;
    Ok(Scenario {
        dt: cfg.dt.map(|t| t.in_au(t_rev)),
        basis,
        initial,
        fraction: cfg.sweep.fraction,
        grid: cfg.grid.unwrap_or_else(GridSpec::covering),
        revival_level: level,
    })
}

pub fn run_sweep(cfg: &RunConfig, axis: Axis) -> Result<SweepResult, Error> {
    let sc = scenario(cfg)?;
    let probes = sc.reference_probes(None)?;
    match axis {
        Axis::Delta => {
            let deltas = cfg.sweep.deltas.clone().unwrap_or_else(default_delta_grid);
            sweep_delta(&sc, &deltas, cfg.sweep.temperature, &probes)
        }
        Axis::Temperature => {
            let omega01 = sc.basis.fundamental_frequency();
            let temps: Vec<f64> = match &cfg.sweep.temperatures {
                Some(list) => list.iter().map(|t| t.in_hartree(omega01) / omega01).collect(),
                None => default_temperature_grid(),
            };
            sweep_temperature(&sc, cfg.sweep.delta, &temps, &probes)
        }
    }
}

fn cmd_sweep(cfg: &RunConfig, axis: Axis, out: &Path) -> Result<(), CliError> {
    let result = run_sweep(cfg, axis)?;
    let file = format!("sweep_{}.csv", result.axis.name());
    io::write_sweep(&out.join(&file), &result)?;
    let points: Vec<Value> = result
        .points
        .iter()
        .map(|pt| {
            json!({
                result.axis.name(): pt.value,
                "left": peak_json(&pt.report.left_cs),
                "right": peak_json(&pt.report.right_cs),
                "central": peak_json(&pt.report.central_negative),
                "purity": pt.purity,
                "error": pt.error,
            })
        })
        .collect();
    let fixed = match result.axis {
        SweepAxis::Delta => json!({ "temperature": temperature_json(&cfg.sweep.temperature) }),
        SweepAxis::Temperature => json!({ "delta_au": cfg.sweep.delta, "temperature_unit": "hw01" }),
    };
    write_manifest(
        out,
        "sweep",
        json!({
            "command": "sweep",
            "axis": result.axis.name(),
            "molecule": molecule_json(cfg),
            "initial_state": format!("{:?}", cfg.state),
            "snapshot_fraction": cfg.sweep.fraction,
            "fixed": fixed,
            "probes": {
                "left": probe_json(&result.probes.left),
                "right": probe_json(&result.probes.right),
                "central": probe_json(&result.probes.central),
            },
            "points": points,
            "files": [file],
        }),
    )?;
    let failed = result.points.iter().filter(|p| p.error.is_some()).count();
    if failed == result.points.len() {
        return Err(CliError::Invariant("every sweep point failed".into()));
    }
    Ok(())
}

fn fit_json(fit: &Result<DecayFit, Error>) -> Value {
    match fit {
        Ok(f) => json!({
            "params": f.named_params().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "rms_residual": f.rms_residual,
            "amplitude_range": f.amplitude_range,
            "accepted": f.accepted(),
            "iterations": f.iterations,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cmd_fit(path: &Path, model: Model, out: &Path) -> Result<(), CliError> {
    let table = io::read_sweep(path).map_err(|e| match e {
        Error::Io(err) => CliError::Config(format!("cannot read {}: {err}", path.display())),
        other => other.into(),
    })?;
    let fits: Vec<(String, Result<DecayFit, Error>)> = table
        .columns
        .iter()
        .map(|(name, _)| {
            let (x, y) = table.magnitudes(name).expect("column exists");
            let fit = match model {
                Model::Exp => {
                    let scale = if table.axis == SweepAxis::Delta { 1e-3 } else { 1.0 };
                    crate::analysis::fit_exponential(&x.iter().map(|v| v * scale).collect::<Vec<_>>(), &y)
                }
                Model::Bose => crate::analysis::fit_bose(&x, &y),
            };
            (name.clone(), fit)
        })
        .collect();

    let (model_name, names): (&str, &[&str]) = match model {
        Model::Exp => ("exponential", &["A", "c"]),
        Model::Bose => ("bose", &["a", "b", "T_c"]),
    };
    let mut csv = format!("probe,{},rms_residual,amplitude_range,accepted\n", names.join(","));
    for (probe, fit) in &fits {
        if let Ok(f) = fit {
            let params: Vec<String> = f.params.iter().map(|v| io::format_number(*v)).collect();
            csv.push_str(&format!(
                "{probe},{},{},{},{}\n",
                params.join(","),
                io::format_number(f.rms_residual),
                io::format_number(f.amplitude_range),
                u8::from(f.accepted())
            ));
        }
    }
    let file = format!("fit_{model_name}.csv");
    fs::write(out.join(&file), csv)?;
    let axis_unit = match (table.axis, model) {
        (SweepAxis::Delta, Model::Exp) => "1e3 au",
        (SweepAxis::Delta, Model::Bose) => "au",
        (SweepAxis::Temperature, _) => "hw01",
    };
    write_manifest(
        out,
        "fit",
        json!({
            "command": "fit",
            "model": model_name,
            "input": path.display().to_string(),
            "axis": table.axis.name(),
            "axis_unit": axis_unit,
            "fits": fits.iter().map(|(k, f)| (k.clone(), fit_json(f))).collect::<serde_json::Map<_, _>>(),
            "files": [file],
        }),
    )?;
    let central = fits
        .iter()
        .find(|(k, _)| k == "central")
        .map(|(_, f)| f)
        .ok_or_else(|| CliError::Config("sweep table has no 'central' column".into()))?;
    match central {
        Ok(f) if f.accepted() => Ok(()),
        Ok(f) => Err(CliError::Invariant(format!(
            "central fit rms {:e} exceeds 5% of the amplitude range {:e}",
            f.rms_residual, f.amplitude_range
        ))),
        Err(e) => Err(CliError::Numerical(clone_error(e))),
    }
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::InsufficientData { got, need } => Error::InsufficientData { got: *got, need: *need },
        Error::DegenerateData(m) => Error::DegenerateData(m.clone()),
        Error::FitDiverged { iterations } => Error::FitDiverged { iterations: *iterations },
        other => Error::Parse(other.to_string()),
    }
}
