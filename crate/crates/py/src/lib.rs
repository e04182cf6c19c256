//! Python module `harper_le`. All exponents are in nats.

use harper_core::cocycle::le_rational_detailed;
use harper_core::harper::{self, build_cocycle};
use harper_core::{
    epsilon_sweep, i_eps_exact, i_eps_quadrature, le_iterative, spectrum_floquet, spectrum_truncation, Backend,
    Error, SpectrumApprox, TrigPoly, Which,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::InadmissibleCoupling(_) | Error::NotRational | Error::ZeroLambda2 => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn which(s: &str) -> PyResult<Which> {
    match s {
        "A" | "a" => Ok(Which::A),
        "B" | "b" => Ok(Which::B),
        _ => Err(PyValueError::new_err(format!("which must be 'A' or 'B', got '{s}'"))),
    }
}

#[pyclass(name = "Coupling", module = "harper_le", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCoupling {
    inner: harper::Coupling,
}

#[pymethods]
impl PyCoupling {
    #[new]
    fn new(l1: f64, l2: f64, l3: f64) -> PyResult<Self> {
        Ok(Self { inner: harper::Coupling::new(l1, l2, l3).map_err(py_err)? })
    }

    /// Parses `"l1,l2,l3"`.
    #[staticmethod]
    fn parse(s: &str) -> PyResult<Self> {
        Ok(Self { inner: s.parse().map_err(py_err)? })
    }

    #[getter]
    fn l1(&self) -> f64 {
        self.inner.l1
    }

    #[getter]
    fn l2(&self) -> f64 {
        self.inner.l2
    }

    #[getter]
    fn l3(&self) -> f64 {
        self.inner.l3
    }

    fn region(&self) -> PyResult<String> {
        Ok(harper::region(&self.inner).map_err(py_err)?.tag.to_string())
    }

    fn member_of(&self) -> PyResult<Vec<String>> {
        Ok(harper::region(&self.inner).map_err(py_err)?.member_of.iter().map(|r| r.to_string()).collect())
    }

    fn in_r(&self) -> bool {
        self.inner.in_r()
    }

    fn c_has_real_zeros(&self) -> bool {
        self.inner.c_has_real_zeros()
    }

    /// Closed-form exponent on the spectrum.
    fn thouless_le(&self) -> PyResult<f64> {
        harper::thouless_le(&self.inner).map_err(py_err)
    }

    fn l_m(&self) -> f64 {
        harper::l_m(&self.inner)
    }

    fn delta(&self) -> PyResult<f64> {
        harper::delta(&self.inner).map_err(py_err)
    }

    /// Closed-form strip average of `log |c|` at height `eps`.
    fn i_eps(&self, eps: f64) -> PyResult<f64> {
        harper::harper_i_eps_closed(&self.inner, eps).map_err(py_err)
    }

    fn criticality(&self) -> PyResult<String> {
        Ok(format!("{:?}", harper::criticality(&self.inner).map_err(py_err)?.criticality).to_lowercase())
    }

    fn duality(&self) -> PyResult<Self> {
        Ok(Self { inner: harper::duality(&self.inner).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Coupling({}, {}, {})", self.inner.l1, self.inner.l2, self.inner.l3)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(name = "Frequency", module = "harper_le", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFrequency {
    inner: harper_core::Frequency,
}

#[pymethods]
impl PyFrequency {
    /// `p/q`, `golden`, `sqrt2m1` or a decimal literal.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: spec.parse().map_err(py_err)? })
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value()
    }

    #[getter]
    fn is_rational(&self) -> bool {
        self.inner.is_rational()
    }

    #[getter]
    fn period(&self) -> Option<u64> {
        self.inner.period()
    }

    fn convergents(&self) -> Vec<(u64, u64)> {
        self.inner.convergents()
    }

    fn __repr__(&self) -> String {
        format!("Frequency('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Accepts a `Frequency` or its string form.
fn freq(beta: &Bound<'_, PyAny>) -> PyResult<harper_core::Frequency> {
    if let Ok(s) = beta.extract::<String>() {
        return s.parse().map_err(py_err);
    }
    Ok(beta.cast::<PyFrequency>()?.get().inner.clone())
}

#[pyclass(name = "Spectrum", module = "harper_le", frozen)]
struct PySpectrum {
    inner: SpectrumApprox,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn intervals(&self) -> Vec<(f64, f64)> {
        self.inner.merged_intervals.clone()
    }

    #[getter]
    fn counts(&self) -> Vec<usize> {
        self.inner.interval_counts.clone()
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.inner.points.clone()
    }

    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    /// Mid-band energies of the `count` most populated intervals.
    fn sample_energies(&self, count: usize) -> Vec<f64> {
        self.inner.sample_energies(count)
    }

    fn hausdorff(&self, other: &PySpectrum) -> PyResult<f64> {
        harper_core::hausdorff(&self.inner, &other.inner).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.merged_intervals.len()
    }
}

/// Iterative exponent of the Harper cocycle at one energy and height.
#[pyfunction]
#[pyo3(signature = (coupling, beta, energy, eps = 0.0, n = 10_000, phases = 8, which = "B"))]
fn le<'py>(
    py: Python<'py>,
    coupling: &PyCoupling,
    beta: &Bound<'py, PyAny>,
    energy: f64,
    eps: f64,
    n: u64,
    phases: usize,
    which: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let c = build_cocycle(&coupling.inner, &freq(beta)?, energy, self::which(which)?).map_err(py_err)?;
    let r = py.detach(|| le_iterative(&c, eps, n, phases)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("estimate", r.estimate)?;
    d.set_item("noise", r.noise)?;
    d.set_item("flagged", r.flagged)?;
    d.set_item("upper_sequence", r.upper_sequence)?;
    Ok(d)
}

/// Exact rational-frequency exponent by quadrature.
#[pyfunction]
#[pyo3(signature = (coupling, beta, energy, eps = 0.0, quad_points = 20_000, which = "B"))]
fn le_rational<'py>(
    py: Python<'py>,
    coupling: &PyCoupling,
    beta: &Bound<'py, PyAny>,
    energy: f64,
    eps: f64,
    quad_points: usize,
    which: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let c = build_cocycle(&coupling.inner, &freq(beta)?, energy, self::which(which)?).map_err(py_err)?;
    let r = py.detach(|| le_rational_detailed(&c, eps, quad_points)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("error_estimate", r.error_estimate)?;
    d.set_item("flagged", r.flagged)?;
    d.set_item("nodes", r.nodes)?;
    Ok(d)
}

/// `L(A_eps)` (or `B`) on a uniform grid, with slopes / 2 pi and kinks.
#[pyfunction]
#[pyo3(signature = (coupling, beta, energy, eps_min = -1.0, eps_max = 1.0, steps = 41, n = 10_000, phases = 8, which = "A"))]
fn epsilon_sweep_harper<'py>(
    py: Python<'py>,
    coupling: &PyCoupling,
    beta: &Bound<'py, PyAny>,
    energy: f64,
    eps_min: f64,
    eps_max: f64,
    steps: usize,
    n: u64,
    phases: usize,
    which: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let c = build_cocycle(&coupling.inner, &freq(beta)?, energy, self::which(which)?).map_err(py_err)?;
    let backend = Backend::Iterative { n, phase_samples: phases };
    let p = py.detach(|| epsilon_sweep(&c, eps_min, eps_max, steps, backend)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("eps", &p.eps_grid)?;
    d.set_item("le", &p.le_values)?;
    d.set_item("omega", &p.slopes)?;
    d.set_item("noise", &p.noise)?;
    d.set_item("kinks", p.kinks.iter().map(|k| (k.eps, k.left_omega, k.right_omega)).collect::<Vec<_>>())?;
    d.set_item("convex", p.is_convex())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (coupling, beta, method = "truncation", size = 1000, thetas = 32))]
fn spectrum(
    py: Python<'_>,
    coupling: &PyCoupling,
    beta: &Bound<'_, PyAny>,
    method: &str,
    size: usize,
    thetas: usize,
) -> PyResult<PySpectrum> {
    let beta = freq(beta)?;
    let lam = coupling.inner;
    let inner = match method {
        "truncation" => py.detach(|| spectrum_truncation(&lam, &beta, thetas, size)),
        "floquet" => match beta {
            harper_core::Frequency::Rational { p, q } => py.detach(|| spectrum_floquet(&lam, p as i64, q, thetas)),
            _ => Err(Error::NotRational),
        },
        _ => return Err(PyValueError::new_err(format!("unknown method '{method}'"))),
    }
    .map_err(py_err)?;
    Ok(PySpectrum { inner })
}

fn trig(coeffs: Vec<(i64, f64, f64)>) -> TrigPoly {
    TrigPoly::from_harmonics(coeffs.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im))))
}

/// Piecewise-linear strip average from root data; `coeffs` is `[(k, re, im), ...]`.
#[pyfunction]
fn i_eps_profile<'py>(py: Python<'py>, coeffs: Vec<(i64, f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let p = i_eps_exact(&trig(coeffs)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("kinks", &p.kink_eps)?;
    d.set_item("segments", p.segments.iter().map(|s| (s.lo, s.hi, s.slope_2pi, s.intercept)).collect::<Vec<_>>())?;
    d.set_item("constant_d", p.constant_d)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (coeffs, eps, tol = 1e-10))]
fn i_eps(coeffs: Vec<(i64, f64, f64)>, eps: f64, tol: f64) -> PyResult<f64> {
    i_eps_quadrature(&trig(coeffs), eps, tol).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (coupling, beta, energy, n = 10_000, phases = 8))]
fn duality_check<'py>(
    py: Python<'py>,
    coupling: &PyCoupling,
    beta: &Bound<'py, PyAny>,
    energy: f64,
    n: u64,
    phases: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let beta = freq(beta)?;
    let r = py.detach(|| harper::duality_le_identity_check(&coupling.inner, &beta, energy, n, phases)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("le_b", r.le_b)?;
    d.set_item("jensen_term", r.jensen_term)?;
    d.set_item("le_b_dual", r.le_b_dual)?;
    d.set_item("residual", r.residual)?;
    Ok(d)
}

#[pymodule]
fn harper_le(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoupling>()?;
    m.add_class::<PyFrequency>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(le, m)?)?;
    m.add_function(wrap_pyfunction!(le_rational, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_sweep_harper, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(i_eps_profile, m)?)?;
    m.add_function(wrap_pyfunction!(i_eps, m)?)?;
    m.add_function(wrap_pyfunction!(duality_check, m)?)?;
    Ok(())
}
