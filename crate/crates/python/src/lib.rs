//! Python bindings for `subplanck`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use subplanck::analysis::{self, DecayFit};
use subplanck::coherent::{coherent_coefficients, CoherentSpec};
use subplanck::open_system::{EvolveOptions, Temperature};
use subplanck::wigner::{self, GridMeta, GridSpec};
use subplanck::{BathSpec, DensityMatrix, Error, OpenSystem, StateVector};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParams { .. }
        | Error::InvalidCoherentState(_)
        | Error::ExcessiveTruncation { .. }
        | Error::InvalidSchedule(_)
        | Error::InvalidGrid(_)
        | Error::NoBoundStates { .. }
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::InsufficientData { .. }
        | Error::DegenerateData(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Bound states of a Morse oscillator.
#[pyclass(name = "MorseBasis", module = "subplanck_py", frozen)]
struct PyMorseBasis {
    inner: subplanck::BoundBasis,
}

#[pymethods]
impl PyMorseBasis {
    #[new]
    #[pyo3(signature = (d, beta, r0, mu))]
    fn new(d: f64, beta: f64, r0: f64, mu: f64) -> PyResult<Self> {
        let params = subplanck::MorseParams::new(d, beta, r0, mu).map_err(py_err)?;
        Ok(Self { inner: subplanck::BoundBasis::new(params).map_err(py_err)? })
    }

    /// Basis for a named preset such as "HI".
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let params = subplanck::MorseParams::preset(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset '{name}'")))?;
        Ok(Self { inner: subplanck::BoundBasis::new(params).map_err(py_err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MorseBasis(levels={}, lambda={:.6})", self.inner.len(), self.inner.lambda())
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    #[getter]
    fn omega01(&self) -> f64 {
        self.inner.fundamental_frequency()
    }

    fn position_matrix(&self) -> Vec<Vec<f64>> {
        let x = self.inner.position_matrix();
        x.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn eigenfunction(&self, n: usize, x: f64) -> PyResult<f64> {
        self.inner.eigenfunction(n, x).map_err(py_err)
    }

    #[pyo3(signature = (nbar = 4))]
    fn revival_time(&self, nbar: usize) -> PyResult<f64> {
        analysis::revival_time(&self.inner, nbar).map_err(py_err)
    }

    /// Coefficients of the coherent state with mean level `nbar`.
    fn coherent_state(&self, nbar: f64) -> PyResult<Vec<Complex64>> {
        let spec = CoherentSpec::from_mean_level(nbar, self.inner.s_values()[0], self.inner.len()).map_err(py_err)?;
        Ok(coherent_coefficients(&spec, self.inner.n_max()).map_err(py_err)?.coeffs)
    }

    /// Density matrices at `times` (a.u.) for the bath `delta`, `temperature`
    /// (in units of the fundamental transition). Returns `[(time, rho)]`.
    #[pyo3(signature = (coeffs, times, delta = 0.0, temperature = 0.0, dt = None))]
    fn evolve(
        &self,
        py: Python<'_>,
        coeffs: Vec<Complex64>,
        times: Vec<f64>,
        delta: f64,
        temperature: f64,
        dt: Option<f64>,
    ) -> PyResult<Vec<(f64, Vec<Vec<Complex64>>)>> {
        let bath = BathSpec::new(delta, Temperature::Fundamental(temperature)).map_err(py_err)?;
        let system = OpenSystem::new(&self.inner, &bath).map_err(py_err)?;
        let t_final = times.iter().copied().fold(0.0, f64::max);
        let dt = match dt {
            Some(v) => v,
            None => system.default_time_step(analysis::revival_time(&self.inner, 1).map_err(py_err)?),
        };
        let rho0 = DensityMatrix::from_pure(&StateVector::from_coeffs(coeffs));
        let traj = py
            .detach(|| system.evolve(&rho0, &EvolveOptions { dt, t_final, snapshot_times: times }))
            .map_err(py_err)?;
        Ok(traj.snapshots.into_iter().map(|s| (s.time, to_rows(&s.rho))).collect())
    }

    /// Wigner grid of `rho` as a dict with `x`, `p` and `values[i][j] = W(x_i, p_j)`.
    /// `grid` is `(x_min, x_max, nx, p_min, p_max, np)`; defaults to the covering grid.
    #[pyo3(signature = (rho, grid = None))]
    fn wigner<'py>(
        &self,
        py: Python<'py>,
        rho: Vec<Vec<Complex64>>,
        grid: Option<(f64, f64, usize, f64, f64, usize)>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = match grid {
            Some((x_min, x_max, nx, p_min, p_max, np)) => {
                GridSpec { x_min, x_max, nx, p_min, p_max, np, ..GridSpec::default() }
            }
            None => GridSpec::covering(),
        };
        let rho = from_rows(rho)?;
        let w = py
            .detach(|| wigner::wigner_transform(&rho, &self.inner, &spec, GridMeta::default()))
            .map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("x", &w.x_axis)?;
        out.set_item("p", &w.p_axis)?;
        let values: Vec<Vec<f64>> = w.values.row_iter().map(|r| r.iter().copied().collect()).collect();
        out.set_item("values", values)?;
        out.set_item("normalization", w.normalization())?;
        out.set_item("lobes", wigner::morphology(&w, wigner::vacuum_width(&self.inner)).lobes.len())?;
        Ok(out)
    }
}

fn to_rows(rho: &DensityMatrix) -> Vec<Vec<Complex64>> {
    rho.matrix().row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<DensityMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("density matrix must be square"));
    }
    let m = DMatrix::from_row_iterator(n, n, rows.into_iter().flatten());
    DensityMatrix::from_matrix(m).map_err(py_err)
}

fn fit_dict<'py>(py: Python<'py>, fit: DecayFit) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (name, value) in fit.named_params() {
        out.set_item(name, value)?;
    }
    out.set_item("rms_residual", fit.rms_residual)?;
    out.set_item("accepted", fit.accepted())?;
    Ok(out)
}

/// `A e^{-c x}` least-squares fit.
#[pyfunction]
fn fit_exponential<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    fit_dict(py, analysis::fit_exponential(&x, &y).map_err(py_err)?)
}

/// `a exp(-b/(e^{T_c/T} - 1))` least-squares fit.
#[pyfunction]
fn fit_bose<'py>(py: Python<'py>, t: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    fit_dict(py, analysis::fit_bose(&t, &y).map_err(py_err)?)
}

#[pymodule]
fn subplanck_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMorseBasis>()?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(fit_bose, m)?)?;
    Ok(())
}
