//! Python bindings. Feature matrices are plain lists of lists of floats and
//! labels are 0 (healthy) / 1 (aphasic).

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lingot_core::eval::{self, ExperimentConfig};
use lingot_core::models::{ClassifierKind, ClassifierParams};
use lingot_core::ot::{self, CostMatrix, EmdOptions, Metric, OtMethod, SinkhornOptions};
use lingot_core::{doc, preprocess, FeatureSample};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn costs(values: Vec<Vec<f64>>) -> CostMatrix {
    CostMatrix { values, metric: Metric::SqEuclidean }
}

#[pyclass(name = "TransportPlan", module = "lingot", frozen)]
struct PyTransportPlan(lingot_core::TransportPlan);

#[pymethods]
impl PyTransportPlan {
    #[getter]
    fn coupling(&self) -> Vec<Vec<f64>> {
        self.0.coupling.clone()
    }

    #[getter]
    fn objective_value(&self) -> f64 {
        self.0.objective_value
    }

    #[getter]
    fn regularization(&self) -> Option<f64> {
        self.0.regularization
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    fn marginal_residual(&self) -> f64 {
        self.0.marginal_residual()
    }

    fn to_json(&self) -> PyResult<String> {
        doc::to_json(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "TransportPlan({}x{}, cost={:.6}, solver={:?})",
            self.0.coupling.len(),
            self.0.coupling.first().map_or(0, Vec::len),
            self.0.objective_value,
            self.0.solver
        )
    }
}

/// Squared Euclidean cost between two point sets.
#[pyfunction]
fn cost_matrix(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(ot::cost_matrix(&xs, &ys).map_err(err)?.values)
}

/// Exact optimal transport by network simplex.
#[pyfunction]
#[pyo3(signature = (a, b, cost, max_iter = 10_000_000))]
fn solve_emd(a: Vec<f64>, b: Vec<f64>, cost: Vec<Vec<f64>>, max_iter: usize) -> PyResult<PyTransportPlan> {
    ot::solve_emd(&a, &b, &costs(cost), &EmdOptions { max_iter }).map(PyTransportPlan).map_err(err)
}

/// Entropy-regularized transport, solved in the log domain.
#[pyfunction]
#[pyo3(signature = (a, b, cost, reg, max_iter = 10_000, tol = 1e-6, normalize_cost = false))]
fn solve_sinkhorn(
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<Vec<f64>>,
    reg: f64,
    max_iter: usize,
    tol: f64,
    normalize_cost: bool,
) -> PyResult<PyTransportPlan> {
    let opts = SinkhornOptions { max_iter, tolerance: tol, normalize_cost, ..Default::default() };
    ot::solve_sinkhorn(&a, &b, &costs(cost), reg, &opts).map(PyTransportPlan).map_err(err)
}

#[pyclass(name = "RobustScaler", module = "lingot", frozen)]
struct PyRobustScaler(lingot_core::RobustScaler);

#[pymethods]
impl PyRobustScaler {
    /// Median / inter-quartile-range scaler fitted on `samples`.
    #[staticmethod]
    fn fit(samples: Vec<Vec<f64>>) -> PyResult<Self> {
        lingot_core::RobustScaler::fit(&samples).map(Self).map_err(err)
    }

    fn transform(&self, samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.0.transform(&samples).map_err(err)
    }

    fn inverse_transform(&self, samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let dim = self.0.dim();
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(err(format!("expected {dim} columns, got {}", bad.len())));
        }
        Ok(samples.iter().map(|z| self.0.inverse_one(z)).collect())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `n` synthetic points interpolated between minority samples and their
/// `k` nearest minority neighbours.
#[pyfunction]
#[pyo3(signature = (minority, n, k = 3, seed = 0))]
fn smote(minority: Vec<Vec<f64>>, n: usize, k: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    preprocess::smote(&minority, &preprocess::SmoteConfig { k, target: n, seed }).map_err(err)
}

fn ot_method(method: &str, reg: f64, normalize_cost: bool, mu: f64) -> PyResult<OtMethod> {
    match method.to_ascii_lowercase().as_str() {
        "emd" => Ok(OtMethod::Emd),
        "sinkhorn" => Ok(OtMethod::Sinkhorn { reg, normalize_cost }),
        "gaussian" => match OtMethod::gaussian_default() {
            OtMethod::Gaussian { max_iter, tol, .. } => Ok(OtMethod::Gaussian { mu, max_iter, tol }),
            other => Ok(other),
        },
        _ => Err(err(format!("unknown method '{method}' (expected emd, sinkhorn or gaussian)"))),
    }
}

#[pyclass(name = "AdaptationModel", module = "lingot", frozen)]
struct PyAdaptationModel(lingot_core::AdaptationModel);

#[pymethods]
impl PyAdaptationModel {
    /// Fits a map carrying `xs` onto `xt`. With `scaled`, transport is
    /// solved in robust-scaled coordinates of `xt`.
    #[staticmethod]
    #[pyo3(signature = (xs, xt, method = "emd", reg = 3.0, normalize_cost = false, mu = 1.0, scaled = false))]
    fn fit(
        xs: Vec<Vec<f64>>,
        xt: Vec<Vec<f64>>,
        method: &str,
        reg: f64,
        normalize_cost: bool,
        mu: f64,
        scaled: bool,
    ) -> PyResult<Self> {
        let method = ot_method(method, reg, normalize_cost, mu)?;
        let model = if scaled {
            let scaler = lingot_core::RobustScaler::fit(&xt).map_err(err)?;
            lingot_core::AdaptationModel::fit_scaled(&xs, &xt, &method, &scaler)
        } else {
            lingot_core::AdaptationModel::fit(&xs, &xt, &method)
        };
        model.map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        doc::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        doc::to_json(&self.0).map_err(err)
    }

    /// Maps new points; training points map to their own images.
    fn transform(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.0.transform(&points).map_err(err)
    }

    fn mean_displacement(&self) -> f64 {
        self.0.mean_displacement()
    }

    #[getter]
    fn plan(&self) -> Option<PyTransportPlan> {
        self.0.plan.clone().map(PyTransportPlan)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
}

#[pyclass(name = "ModelBundle", module = "lingot", frozen)]
struct PyModelBundle(lingot_core::models::ModelBundle);

#[pymethods]
impl PyModelBundle {
    /// Robust scaling, SMOTE to class balance, then `classifier` ("svm",
    /// "rf" or "mlp"). `params` is a JSON object of hyperparameters.
    #[staticmethod]
    #[pyo3(signature = (x, y, classifier = "svm", smote_k = 3, seed = 0, params = None, adaptation = None))]
    fn fit(
        x: Vec<Vec<f64>>,
        y: Vec<u8>,
        classifier: &str,
        smote_k: usize,
        seed: u64,
        params: Option<&str>,
        adaptation: Option<&PyAdaptationModel>,
    ) -> PyResult<Self> {
        let kind: ClassifierKind = classifier.parse().map_err(err)?;
        let params: ClassifierParams = match params {
            Some(text) => serde_json::from_str(text).map_err(err)?,
            None => ClassifierParams::default(),
        };
        let mut bundle =
            lingot_core::models::ModelBundle::fit(&x, &y, kind, &params, smote_k, None, seed).map_err(err)?;
        bundle.adaptation = adaptation.map(|a| a.0.clone());
        Ok(Self(bundle))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        doc::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        doc::to_json(&self.0).map_err(err)
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<u8>> {
        x.iter().map(|v| self.0.predict(v).map_err(err)).collect()
    }

    /// Aphasia scores; larger means more likely aphasic.
    fn score(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        x.iter().map(|v| self.0.score(v).map_err(err)).collect()
    }

    #[getter]
    fn classifier(&self) -> &'static str {
        self.0.classifier.kind().as_str()
    }
}

/// Macro-averaged F1 in percent.
#[pyfunction]
fn macro_f1(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<f64> {
    eval::macro_f1(&y_true, &y_pred).map_err(err)
}

/// Area under the ROC curve in percent; ties count half.
#[pyfunction]
fn auroc(y_true: Vec<u8>, scores: Vec<f64>) -> PyResult<f64> {
    eval::auroc(&y_true, &scores).map_err(err)
}

fn group<'py>(py: Python<'py>, samples: &[FeatureSample]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("features", samples.iter().map(|s| s.features.to_vec()).collect::<Vec<_>>())?;
    d.set_item("labels", samples.iter().map(|s| s.label.class().map(|c| c as u8)).collect::<Vec<_>>())?;
    d.set_item("subjects", samples.iter().map(|s| s.subject_id.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Generates the synthetic two-language corpus. `spec` is a JSON spec; when
/// omitted a small default corpus is drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (spec = None, seed = 0, paired = false))]
fn synthetic_corpus<'py>(py: Python<'py>, spec: Option<&str>, seed: u64, paired: bool) -> PyResult<Bound<'py, PyDict>> {
    let mut spec: lingot_core::SynthCorpusSpec = match spec {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => lingot_core::SynthCorpusSpec::small(seed),
    };
    spec.paired |= paired;
    let data = eval::generate_synthetic_corpus(&spec).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("source_clinical", group(py, &data.source_clinical)?)?;
    out.set_item("target_clinical", group(py, &data.target_clinical)?)?;
    out.set_item("source_pool", group(py, &data.source_pool)?)?;
    out.set_item("target_pool", group(py, &data.target_pool)?)?;
    out.set_item("pools_paired", data.pools_paired)?;
    Ok(out)
}

/// JSON of the small default synthetic spec for `seed`, for editing.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn synthetic_spec(seed: u64) -> PyResult<String> {
    serde_json::to_string_pretty(&lingot_core::SynthCorpusSpec::small(seed)).map_err(err)
}

#[pyclass(name = "ExperimentReport", module = "lingot", frozen)]
struct PyExperimentReport(lingot_core::ExperimentReport);

#[pymethods]
impl PyExperimentReport {
    fn table(&self) -> String {
        self.0.to_table()
    }

    fn to_json(&self) -> PyResult<String> {
        doc::to_json(&self.0).map_err(err)
    }

    /// Per-seed macro-F1 scores of one row.
    fn f1_scores(&self, label: &str, classifier: &str) -> PyResult<Vec<f64>> {
        let kind: ClassifierKind = classifier.parse().map_err(err)?;
        let row = self.0.row(label, kind).ok_or_else(|| err(format!("no row {label} / {kind}")))?;
        Ok(row.f1_scores())
    }
}

/// Runs an experiment config (JSON text). Relative input paths resolve
/// against `base_dir`. Nothing is written to disk.
#[pyfunction]
#[pyo3(signature = (config, base_dir = None))]
fn run_experiment(py: Python<'_>, config: &str, base_dir: Option<PathBuf>) -> PyResult<PyExperimentReport> {
    let mut cfg = ExperimentConfig::from_json(config).map_err(err)?;
    if let Some(base) = base_dir {
        cfg.resolve_paths(&base);
    }
    cfg.validate().map_err(err)?;
    py.allow_threads(|| cfg.run()).map(PyExperimentReport).map_err(err)
}

#[pymodule]
fn lingot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FEATURE_NAMES", lingot_core::FEATURE_NAMES.to_vec())?;
    m.add_class::<PyTransportPlan>()?;
    m.add_class::<PyRobustScaler>()?;
    m.add_class::<PyAdaptationModel>()?;
    m.add_class::<PyModelBundle>()?;
    m.add_class::<PyExperimentReport>()?;
    m.add_function(wrap_pyfunction!(cost_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(solve_emd, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sinkhorn, m)?)?;
    m.add_function(wrap_pyfunction!(smote, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_spec, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
