//! Python bindings. Agent and topology indices are 0-based on the Python
//! side, as in the Rust API; graph files keep their 1-based format.

use std::path::{Path, PathBuf};

use nlpi_consensus::config::{load_graph, ScenarioConfig};
use nlpi_consensus::metrics;
use nlpi_consensus::{
    has_jointly_strongly_connected_basis, union_graph, ControllerParams, DiGraph,
    DiagnosticsReport, Error, GainVector, Model, Scenario, Segment, SimSettings, SwitchSchedule,
    Trajectory,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    nlpi,
    DivergenceError,
    PyRuntimeError,
    "The simulated state blew up."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Diverged { .. } => DivergenceError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "DiGraph", module = "nlpi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDiGraph {
    inner: DiGraph,
}

#[pymethods]
impl PyDiGraph {
    /// `edges` is a list of `(from, to, weight)` with 0-based agents.
    #[new]
    #[pyo3(signature = (n, edges=Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(PyDiGraph {
            inner: DiGraph::from_edges(n, &edges).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(PyDiGraph {
            inner: load_graph(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, source_name="<string>"))]
    fn parse(text: &str, source_name: &str) -> PyResult<Self> {
        Ok(PyDiGraph {
            inner: DiGraph::parse_edge_list(text, source_name).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges()
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn laplacian(&self) -> Vec<Vec<f64>> {
        self.inner.laplacian().rows()
    }

    fn laplacian_rank(&self) -> usize {
        self.inner.laplacian().rank()
    }

    fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        self.inner.strongly_connected_components()
    }

    fn is_strongly_connected(&self) -> bool {
        self.inner.is_strongly_connected()
    }

    fn basis_bicomponents(&self) -> Vec<Vec<usize>> {
        self.inner
            .basis_bicomponents()
            .iter()
            .map(|b| b.members().to_vec())
            .collect()
    }

    /// Left null vector of the Laplacian restricted to `members` (all
    /// agents if omitted), normalized to sum 1.
    #[pyo3(signature = (members=None))]
    fn left_null_vector(&self, members: Option<Vec<usize>>) -> PyResult<Vec<f64>> {
        let l = self.inner.laplacian();
        let l = match members {
            Some(m) => l.reduced(&m).map_err(to_py)?,
            None => l,
        };
        Ok(l.left_null_vector().map_err(to_py)?.omega().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "DiGraph(n={}, edges={})",
            self.inner.n(),
            self.inner.edges().len()
        )
    }
}

fn graphs_of(gs: &[PyRef<'_, PyDiGraph>]) -> Vec<DiGraph> {
    gs.iter().map(|g| g.inner.clone()).collect()
}

#[pyfunction(name = "has_jointly_strongly_connected_basis")]
fn py_joint_basis(graphs: Vec<PyRef<'_, PyDiGraph>>) -> PyResult<bool> {
    has_jointly_strongly_connected_basis(&graphs_of(&graphs)).map_err(to_py)
}

#[pyfunction(name = "union_graph")]
fn py_union_graph(graphs: Vec<PyRef<'_, PyDiGraph>>) -> PyResult<PyDiGraph> {
    Ok(PyDiGraph {
        inner: union_graph(&graphs_of(&graphs)).map_err(to_py)?,
    })
}

#[pyclass(name = "Schedule", module = "nlpi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: SwitchSchedule,
}

#[pymethods]
impl PySchedule {
    /// `segments` is a list of `(duration, topology)`.
    #[new]
    #[pyo3(signature = (graphs, segments, periodic=false))]
    fn new(
        graphs: Vec<PyRef<'_, PyDiGraph>>,
        segments: Vec<(f64, usize)>,
        periodic: bool,
    ) -> PyResult<Self> {
        let segs: Vec<Segment> = segments
            .into_iter()
            .map(|(d, t)| Segment::new(d, t))
            .collect();
        Ok(PySchedule {
            inner: SwitchSchedule::new(graphs_of(&graphs), &segs, periodic).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn fixed(graph: PyRef<'_, PyDiGraph>) -> Self {
        PySchedule {
            inner: SwitchSchedule::fixed(graph.inner.clone()),
        }
    }

    fn topology_at(&self, t: f64) -> PyResult<usize> {
        self.inner.topology_at(t).map_err(to_py)
    }

    fn switch_times(&self) -> Vec<f64> {
        self.inner.switch_times().to_vec()
    }

    #[getter]
    fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    /// Validation report as a dict; `passed` is the overall verdict.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.validate();
        let d = PyDict::new(py);
        d.set_item("joint_basis", r.joint_basis)?;
        d.set_item("tau_min", r.tau_min)?;
        d.set_item("min_segment", r.min_segment)?;
        d.set_item("reactivation_gaps", r.reactivation_gaps.clone())?;
        d.set_item("dwell_ok", r.dwell_ok())?;
        d.set_item("reactivation_ok", r.reactivation_ok())?;
        d.set_item("passed", r.passed())?;
        Ok(d)
    }
}

#[pyclass(name = "Scenario", module = "nlpi", frozen)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (
        schedule, gains, x0, lambda1, lambda2, rho=None, model="si", v0=None,
        horizon=SimSettings::default().horizon,
        step=SimSettings::default().step,
        record_every=SimSettings::default().record_every,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        schedule: PyRef<'_, PySchedule>,
        gains: Vec<f64>,
        x0: Vec<f64>,
        lambda1: f64,
        lambda2: f64,
        rho: Option<f64>,
        model: &str,
        v0: Option<Vec<f64>>,
        horizon: f64,
        step: f64,
        record_every: usize,
    ) -> PyResult<Self> {
        let model: Model = model.parse().map_err(to_py)?;
        let params = match (model, rho) {
            (_, Some(r)) => ControllerParams::new(lambda1, lambda2, r),
            (Model::Si, None) => ControllerParams::single_integrator(lambda1, lambda2),
            (Model::Di, None) => Err(Error::Config("model `di` needs rho".into())),
        }
        .map_err(to_py)?;
        let inner = Scenario::new(
            schedule.inner.clone(),
            GainVector::new(gains).map_err(to_py)?,
            params,
            model,
            x0,
            v0,
            SimSettings {
                horizon,
                step,
                record_every,
            },
        )
        .map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    /// Load a TOML scenario; graph paths resolve relative to the file.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let inner = ScenarioConfig::from_path(&path)
            .and_then(|c| c.to_scenario(&base))
            .map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    /// Self-contained TOML text that rebuilds this scenario.
    fn to_config(&self) -> String {
        ScenarioConfig::from_scenario(&self.inner, None).to_toml()
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model().as_str()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn gains(&self) -> Vec<f64> {
        self.inner.gains().as_slice().to_vec()
    }

    /// Copy with some settings replaced.
    #[pyo3(signature = (model=None, horizon=None, step=None, gains=None))]
    fn with_overrides(
        &self,
        model: Option<&str>,
        horizon: Option<f64>,
        step: Option<f64>,
        gains: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let model = model.map(str::parse::<Model>).transpose().map_err(to_py)?;
        let mut sc = self
            .inner
            .with_overrides(model, horizon, step)
            .map_err(to_py)?;
        if let Some(b) = gains {
            sc = sc
                .with_gains(GainVector::new(b).map_err(to_py)?)
                .map_err(to_py)?;
        }
        Ok(PyScenario { inner: sc })
    }

    /// Run the simulation. The GIL is released while integrating.
    fn simulate(&self, py: Python<'_>) -> PyResult<PyTrajectory> {
        let sc = &self.inner;
        let tr = py.detach(|| nlpi_consensus::simulate(sc)).map_err(to_py)?;
        Ok(PyTrajectory {
            inner: tr,
            gains: sc.gains().clone(),
        })
    }
}

#[pyclass(name = "Trajectory", module = "nlpi", frozen)]
struct PyTrajectory {
    inner: Trajectory,
    gains: GainVector,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    /// Positions per sample.
    #[getter]
    fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len())
            .map(|k| self.inner.positions(k).to_vec())
            .collect()
    }

    /// Velocities per sample, `None` for single integrators.
    #[getter]
    fn velocities(&self) -> Option<Vec<Vec<f64>>> {
        (self.inner.model == Model::Di).then(|| {
            (0..self.inner.len())
                .map(|k| self.inner.velocities(k).unwrap_or(&[]).to_vec())
                .collect()
        })
    }

    /// Full augmented state per sample.
    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.clone()
    }

    #[getter]
    fn controls(&self) -> Vec<Vec<f64>> {
        self.inner.controls.clone()
    }

    #[getter]
    fn nussbaum(&self) -> Vec<Vec<f64>> {
        self.inner.nussbaum.clone()
    }

    #[getter]
    fn active_topology(&self) -> Vec<usize> {
        self.inner.active_topology.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn consensus_diameter(&self) -> Vec<f64> {
        metrics::consensus_diameter(&self.inner)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path)
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        self.inner
            .write_csv(std::io::BufWriter::new(f))
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }

    /// Diagnostics summary as a dict.
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = DiagnosticsReport::new(&self.inner, &self.gains).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("initial_diameter", r.initial_diameter())?;
        d.set_item("final_diameter", r.final_diameter())?;
        d.set_item("product_tail", r.product.tail)?;
        d.set_item("velocity_tail", r.velocity_tail)?;
        d.set_item("nussbaum_bound_ok", r.nussbaum.passed())?;
        d.set_item(
            "nussbaum_margins",
            r.nussbaum
                .agents
                .iter()
                .map(|a| a.margin)
                .collect::<Vec<_>>(),
        )?;
        d.set_item("sup_x", r.boundedness.x)?;
        d.set_item("sup_u", r.boundedness.u)?;
        d.set_item("report", r.to_string())?;
        Ok(d)
    }
}

/// `2 (pi + 1/|b|)`.
#[pyfunction(name = "nussbaum_bound")]
fn py_nussbaum_bound(b: f64) -> f64 {
    metrics::nussbaum_bound(b)
}

#[pymodule]
fn nlpi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiGraph>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(py_joint_basis, m)?)?;
    m.add_function(wrap_pyfunction!(py_union_graph, m)?)?;
    m.add_function(wrap_pyfunction!(py_nussbaum_bound, m)?)?;
    m.add("DivergenceError", m.py().get_type::<DivergenceError>())?;
    Ok(())
}
