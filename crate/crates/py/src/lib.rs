use edgelink_core::asym::{asym_metrics, refine_exact, AsymConfig};
use edgelink_core::dynamics::{analyze_trace, evolve, DynamicsTrace};
use edgelink_core::lattice::{build_system, BlueSites};
use edgelink_core::npsolver::{eigenvalues_boundary, fidelity_from_roots, ExactBranches};
use edgelink_core::perturb::CouplingSums;
use edgelink_core::spectral::{self, edge_window};
use edgelink_core::symmetry::{build_symmetry_operator, classify_parity};
use edgelink_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Hands serializable results to Python as plain dicts and lists.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Lattice geometry with optional qubits.
#[pyclass(frozen, skip_from_py_object, name = "SystemSpec")]
#[derive(Clone)]
struct PySystemSpec(edgelink_core::lattice::SystemSpec);

#[pymethods]
impl PySystemSpec {
    /// An `l x l` lattice, with symmetric corner qubits when `eps` and `g` are given.
    #[staticmethod]
    #[pyo3(signature = (l, eps=None, g=None))]
    fn square(l: usize, eps: Option<f64>, g: Option<f64>) -> PyResult<Self> {
        let spec = edgelink_core::lattice::SystemSpec::square(l);
        match (eps, g) {
            (Some(e), Some(g)) => Ok(PySystemSpec(spec.with_corner_qubits(e, g, e, g))),
            (None, None) => Ok(PySystemSpec(spec)),
            _ => Err(PyValueError::new_err("give both eps and g or neither")),
        }
    }

    #[staticmethod]
    fn rect(lx: usize, ly: usize) -> Self {
        PySystemSpec(edgelink_core::lattice::SystemSpec::rect(lx, ly))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        edgelink_core::lattice::SystemSpec::from_json(text)
            .map(PySystemSpec)
            .map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn with_corner_qubits(&self, eps1: f64, g1: f64, eps2: f64, g2: f64) -> Self {
        PySystemSpec(self.0.clone().with_corner_qubits(eps1, g1, eps2, g2))
    }

    fn with_edge_qubits(&self, d: usize, eps: f64, g: f64) -> Self {
        PySystemSpec(self.0.clone().with_edge_qubits(d, eps, g))
    }

    fn with_hopping(&self, j: f64) -> Self {
        PySystemSpec(self.0.clone().with_hopping(j))
    }

    fn with_blue_first_row(&self) -> Self {
        PySystemSpec(self.0.clone().with_blue_sites(BlueSites::OddRows))
    }

    #[getter]
    fn lx(&self) -> usize {
        self.0.lx
    }

    #[getter]
    fn ly(&self) -> usize {
        self.0.ly
    }

    #[getter]
    fn j(&self) -> f64 {
        self.0.j
    }

    #[getter]
    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    /// Dense Hamiltonian dimension.
    fn dim(&self) -> PyResult<usize> {
        Ok(build_system(&self.0).map_err(py_err)?.dim())
    }

    fn __repr__(&self) -> String {
        format!("SystemSpec({})", self.0.to_json())
    }
}

/// Eigenvalues and eigenvectors of a system, ascending.
#[pyclass(frozen, name = "Spectrum")]
struct PySpectrum(spectral::Spectrum);

#[pymethods]
impl PySpectrum {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    /// `bulk` or `edge` per state.
    #[getter]
    fn bands(&self) -> Vec<&'static str> {
        self.0.labels().iter().map(|l| l.band.as_str()).collect()
    }

    /// `+1`, `-1` or `None` per state.
    #[getter]
    fn parities(&self) -> Vec<Option<i8>> {
        self.0.labels().iter().map(|l| l.parity.map(|p| p.as_i8())).collect()
    }

    /// `(|psi(Q1)|^2, |psi(Q2)|^2)` per state; `None` without qubits.
    #[getter]
    fn qubit_weights(&self) -> Option<Vec<(f64, f64)>> {
        self.0.qubit_weights()
    }

    /// Edge-window constants around `eps_tilde`; needs the isolated lattice.
    fn calibrate(&self, py: Python<'_>, eps_tilde: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &edge_window(&self.0, eps_tilde).map_err(py_err)?)
    }

    /// Populations after starting in basis state `initial` (0 is Q1).
    #[pyo3(signature = (times, initial=0))]
    fn evolve(&self, py: Python<'_>, times: Vec<f64>, initial: usize) -> PyResult<Py<PyAny>> {
        let t = evolve(&self.0, initial, &times).map_err(py_err)?;
        trace_dict(py, &t)
    }
}

fn trace_dict(py: Python<'_>, t: &DynamicsTrace) -> PyResult<Py<PyAny>> {
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", &t.times)?;
    d.set_item("p_q1", &t.p_q1)?;
    d.set_item("p_q2", &t.p_q2)?;
    d.set_item("p_lat", &t.p_lat)?;
    Ok(d.into_any().unbind())
}

/// Diagonalize a system; symmetric ones get parity labels.
#[pyfunction]
fn diagonalize(py: Python<'_>, spec: &PySystemSpec) -> PyResult<PySpectrum> {
    py.detach(|| {
        let s = spectral::diagonalize(&build_system(&spec.0)?)?;
        if spec.0.is_symmetric() {
            classify_parity(&s, &build_symmetry_operator(&spec.0)?)
        } else {
            Ok(s)
        }
    })
    .map(PySpectrum)
    .map_err(py_err)
}

/// Frequency, fidelity and peak transfer of a uniformly sampled trace.
#[pyfunction]
fn analyze(py: Python<'_>, t: Vec<f64>, p_q1: Vec<f64>, p_q2: Vec<f64>, p_lat: Vec<f64>) -> PyResult<Py<PyAny>> {
    let trace = DynamicsTrace {
        times: t,
        p_q1,
        p_q2,
        p_lat,
    };
    to_py(py, &analyze_trace(&trace).map_err(py_err)?)
}

fn corner_branches(l: usize) -> Result<ExactBranches, Error> {
    let spec = edgelink_core::lattice::SystemSpec::square(l);
    let lat = spectral::diagonalize(&build_system(&spec)?)?;
    ExactBranches::new(&CouplingSums::from_spectrum(&lat, [1, l * l])?)
}

/// Exact dressed levels of the symmetric corner system from the boundary equation.
#[pyfunction]
fn boundary_roots(py: Python<'_>, l: usize, eps: f64, g: f64) -> PyResult<Py<PyAny>> {
    let roots = py
        .detach(|| eigenvalues_boundary(&corner_branches(l)?, eps, g))
        .map_err(py_err)?;
    to_py(py, &roots)
}

/// Long-time transfer fidelity of the symmetric corner system.
#[pyfunction]
fn fidelity(py: Python<'_>, l: usize, eps: f64, g: f64) -> PyResult<f64> {
    py.detach(|| {
        let roots = eigenvalues_boundary(&corner_branches(l)?, eps, g)?;
        Ok(fidelity_from_roots(&roots)?.fidelity)
    })
    .map_err(py_err)
}

/// Asymmetric corner qubits: constant-f solution, limits and the refined pair.
#[pyfunction]
#[pyo3(signature = (l, eps, g, at=None))]
fn asym(py: Python<'_>, l: usize, eps: (f64, f64), g: (f64, f64), at: Option<f64>) -> PyResult<Py<PyAny>> {
    let (cfg, result, exact) = py
        .detach(|| {
            let spec = edgelink_core::lattice::SystemSpec::square(l);
            let lat = spectral::diagonalize(&build_system(&spec)?)?;
            let sums = CouplingSums::from_spectrum(&lat, [1, l * l])?;
            let cal = edge_window(&lat, 0.5 * (eps.0 + eps.1));
            let at = match (at, &cal) {
                (Some(a), _) => a,
                (None, Ok(c)) => c.lambda_mid,
                (None, Err(_)) => return Err(cal.unwrap_err()),
            };
            let mut cfg = AsymConfig::from_sums(&sums, at, [eps.0, eps.1], [g.0, g.1])?;
            cfg.delta_e = cal.ok().map(|c| c.delta_e);
            let result = asym_metrics(&cfg)?;
            let exact = refine_exact(&cfg, &sums)?;
            Ok((cfg, result, exact))
        })
        .map_err(py_err)?;
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a AsymConfig,
        #[serde(flatten)]
        result: &'a edgelink_core::asym::AsymResult,
        exact: &'a edgelink_core::asym::ExactPair,
    }
    to_py(
        py,
        &Report {
            config: &cfg,
            result: &result,
            exact: &exact,
        },
    )
}

#[pymodule]
#[pyo3(name = "edgelink")]
fn edgelink_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemSpec>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(diagonalize, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_roots, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(asym, m)?)?;
    Ok(())
}
