//! Python bindings for `aggdiff-core`.
//!
//! ```python
//! import aggdiff
//! g = aggdiff.Grid(20.0, 512)
//! u0 = aggdiff.Field.gaussian(g, mass=1.0, sigma=1.0)
//! k = aggdiff.Kernel.chemotaxis(g)
//! states = aggdiff.run(u0, t_end=1.0, dt_max=0.01, kernel=k, output_times=[0.5, 1.0])
//! ```

use aggdiff_core as core;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::NumericalBlowup { .. } | core::Error::StiffnessAbort { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        core::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Uniform cell-centred grid on `[-half_width, half_width]`.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(core::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(half_width: f64, n_cells: usize) -> PyResult<Self> {
        core::Grid::new(half_width, n_cells)
            .map(PyGrid)
            .map_err(to_py)
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.0.n_cells()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }

    fn centers(&self) -> Vec<f64> {
        self.0.centers()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(half_width={}, n_cells={})",
            self.0.half_width(),
            self.0.n_cells()
        )
    }
}

/// Cell-average density on a grid at a time.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(core::Field);

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (grid, values, time = 0.0))]
    fn new(grid: &PyGrid, values: Vec<f64>, time: f64) -> PyResult<Self> {
        core::Field::new(grid.0, values, time)
            .map(PyField)
            .map_err(to_py)
    }

    /// Centred Gaussian of the given mass and standard deviation.
    #[staticmethod]
    #[pyo3(signature = (grid, mass = 1.0, sigma = 1.0))]
    fn gaussian(grid: &PyGrid, mass: f64, sigma: f64) -> PyResult<Self> {
        if !(sigma > 0.0) {
            return Err(PyValueError::new_err(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let var = sigma * sigma;
        let norm = mass / (2.0 * std::f64::consts::PI * var).sqrt();
        core::Field::from_fn(grid.0, 0.0, |x| norm * (-x * x / (2.0 * var)).exp())
            .map(PyField)
            .map_err(to_py)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    /// `L^p` norm; pass `float("inf")` for the sup norm.
    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.0.lp_norm(p).map_err(to_py)
    }

    fn first_moment(&self) -> f64 {
        self.0.first_moment()
    }

    fn value_at_origin(&self) -> f64 {
        self.0.value_at_origin()
    }

    /// Parabolic rescaling `lambda u(lambda x, lambda^2 t)` sampled on `target`.
    fn rescale(&self, lam: f64, target: &PyGrid) -> PyResult<PyField> {
        self.0.rescale(lam, &target.0).map(PyField).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Field(n_cells={}, time={}, mass={})",
            self.0.values().len(),
            self.0.time(),
            self.0.mass()
        )
    }
}

/// Cell-integrated samples of `K'` on a grid.
#[pyclass(name = "Kernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel(core::Kernel);

fn sample(spec: core::KernelSpec, grid: &PyGrid) -> PyResult<PyKernel> {
    core::sample_kernel(&spec, &grid.0)
        .map(PyKernel)
        .map_err(to_py)
}

#[pymethods]
impl PyKernel {
    /// `K'(x) = -sign(x) e^{-|x|} / 2`.
    #[staticmethod]
    fn chemotaxis(grid: &PyGrid) -> PyResult<Self> {
        sample(core::KernelSpec::Chemotaxis, grid)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, amplitude, width = 1.0))]
    fn gaussian_mollifier(grid: &PyGrid, amplitude: f64, width: f64) -> PyResult<Self> {
        sample(
            core::KernelSpec::GaussianMollifier { amplitude, width },
            grid,
        )
    }

    #[staticmethod]
    #[pyo3(signature = (grid, amplitude, width = 1.0))]
    fn odd_gaussian(grid: &PyGrid, amplitude: f64, width: f64) -> PyResult<Self> {
        sample(core::KernelSpec::OddGaussian { amplitude, width }, grid)
    }

    #[staticmethod]
    fn zero(grid: &PyGrid) -> PyResult<Self> {
        sample(core::KernelSpec::Zero, grid)
    }

    /// Piecewise-linear `K'` through `(x, values)`, zero outside the table.
    #[staticmethod]
    fn tabulated(grid: &PyGrid, x: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let spec = core::KernelSpec::Tabulated { x, values };
        spec.validate().map_err(to_py)?;
        sample(spec, grid)
    }

    /// `A = int K'`.
    fn total_integral(&self) -> f64 {
        self.0.total_integral()
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm()
    }

    fn samples(&self) -> Vec<f64> {
        self.0.samples().to_vec()
    }
}

/// `K' * u` by zero-padded FFT.
#[pyfunction]
fn convolve(kernel: &PyKernel, u: &PyField) -> PyResult<PyField> {
    core::convolve(&kernel.0, &u.0).map(PyField).map_err(to_py)
}

/// Solution `v` of `-v'' + v = u` with `v = 0` on both domain faces.
#[pyfunction]
fn solve_elliptic(u: &PyField) -> PyResult<PyField> {
    core::solve_elliptic(&u.0).map(PyField).map_err(to_py)
}

/// `M G(., t)` sampled on `grid`.
#[pyfunction]
fn heat_profile(mass: f64, grid: &PyGrid, t: f64) -> PyResult<PyField> {
    core::evaluate_heat(&core::HeatProfile::new(mass), &grid.0, t)
        .map(PyField)
        .map_err(to_py)
}

/// Viscous Burgers diffusion wave `U_{M,A}(., t)` sampled on `grid`.
#[pyfunction]
fn diffusion_wave(mass: f64, a: f64, grid: &PyGrid, t: f64) -> PyResult<PyField> {
    let w = core::DiffusionWave::new(mass, a).map_err(to_py)?;
    core::evaluate_wave(&w, &grid.0, t)
        .map(PyField)
        .map_err(to_py)
}

/// Normalisation constant `C_{M,A}` of the diffusion wave.
#[pyfunction]
fn burgers_constant(mass: f64, a: f64) -> PyResult<f64> {
    core::burgers_constant(mass, a).map_err(to_py)
}

/// Evolves `u0` to `t_end` and returns the states at `output_times` (default:
/// `[t_end]`). The drift is `K' * u` when `kernel` is given, `a u` when
/// `burgers_a` is given, and zero otherwise.
#[pyfunction]
#[pyo3(signature = (u0, t_end, dt_max, kernel = None, burgers_a = None, output_times = None, cfl = 0.5, dt_min = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    u0: &PyField,
    t_end: f64,
    dt_max: f64,
    kernel: Option<&PyKernel>,
    burgers_a: Option<f64>,
    output_times: Option<Vec<f64>>,
    cfl: f64,
    dt_min: f64,
) -> PyResult<Vec<PyField>> {
    let mode = match (kernel, burgers_a) {
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err(
                "pass either kernel or burgers_a, not both",
            ))
        }
        (Some(k), None) => core::VelocityMode::nonlocal(k.0.clone()),
        (None, Some(a)) => core::VelocityMode::LocalBurgers { a },
        (None, None) => core::VelocityMode::None,
    };
    let mut cfg = core::SolverConfig::new(*u0.0.grid(), mode, t_end, dt_max);
    cfg.cfl_advection = cfl;
    cfg.dt_min = dt_min;
    if let Some(times) = output_times {
        cfg = cfg.with_output_times(times);
    }
    let u0 = u0.0.clone();
    py.detach(move || {
        let mut states = Vec::new();
        core::run(&u0, &cfg, |u| states.push(PyField(u.clone()))).map(|_| states)
    })
    .map_err(to_py)
}

/// Diagnostics of one state as a dict: time, mass, peak, first_moment,
/// boundary_mass_fraction, norms, and the scaled heat and wave distances
/// keyed by `p` (the wave entry is present only when `a != 0`).
#[pyfunction]
#[pyo3(signature = (u, profile_mass, a = 0.0))]
fn record(py: Python<'_>, u: &PyField, profile_mass: f64, a: f64) -> PyResult<Py<PyAny>> {
    let r = core::record(&u.0, profile_mass, a).map_err(to_py)?;
    let table = |t: &core::NormTable| -> PyResult<Bound<'_, PyDict>> {
        let d = PyDict::new(py);
        for (p, v) in t.iter() {
            d.set_item(p, v)?;
        }
        Ok(d)
    };
    let d = PyDict::new(py);
    d.set_item("time", r.time)?;
    d.set_item("mass", r.mass)?;
    d.set_item("peak", r.peak)?;
    d.set_item("first_moment", r.first_moment)?;
    d.set_item("boundary_mass_fraction", r.boundary_mass_fraction)?;
    d.set_item("norms", table(&r.norms)?)?;
    d.set_item(
        "scaled_heat_distance",
        r.scaled_heat_distance.as_ref().map(table).transpose()?,
    )?;
    d.set_item(
        "scaled_wave_distance",
        r.scaled_wave_distance.as_ref().map(table).transpose()?,
    )?;
    Ok(d.into_any().unbind())
}

/// Least-squares fit of `log value` against `log t` over `[t_lo, t_hi]`.
/// Returns `(slope, intercept, r_squared, points)`.
#[pyfunction]
fn fit_decay_exponent(
    times: Vec<f64>,
    values: Vec<f64>,
    t_lo: f64,
    t_hi: f64,
) -> PyResult<(f64, f64, f64, usize)> {
    if times.len() != values.len() {
        return Err(PyValueError::new_err("times and values differ in length"));
    }
    let series: Vec<(f64, f64)> = times.into_iter().zip(values).collect();
    let f = core::fit_decay_exponent(&series, (t_lo, t_hi)).map_err(to_py)?;
    Ok((f.slope, f.intercept, f.r_squared, f.points))
}

#[pymodule]
fn aggdiff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_elliptic, m)?)?;
    m.add_function(wrap_pyfunction!(heat_profile, m)?)?;
    m.add_function(wrap_pyfunction!(diffusion_wave, m)?)?;
    m.add_function(wrap_pyfunction!(burgers_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(record, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_exponent, m)?)?;
    Ok(())
}
