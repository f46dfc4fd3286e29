//! Python bindings: datasets, model fitting, prediction and explanation.

use std::path::PathBuf;

use dpsn::harness;
use dpsn::interpret::{self, DistanceMode};
use dpsn::series::{self, DEFAULT_EPSILON};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: dpsn::Error) -> PyErr {
    match &e {
        dpsn::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        dpsn::Error::NonFiniteLoss { .. } | dpsn::Error::MismatchedTasks(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A labeled collection of univariate series.
#[pyclass(name = "Dataset", module = "dpsn", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: dpsn::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (values, labels, name = "data".to_string()))]
    fn new(values: Vec<Vec<f64>>, labels: Vec<String>, name: String) -> PyResult<Self> {
        if values.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} series but {} labels",
                values.len(),
                labels.len()
            )));
        }
        let rows: Vec<(String, Vec<f64>)> = labels.into_iter().zip(values).collect();
        Ok(PyDataset {
            inner: dpsn::Dataset::from_labeled(name, rows).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// Original class labels in class-index order.
    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    /// Original label of every series.
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner
            .series
            .iter()
            .map(|s| self.inner.classes[s.label].clone())
            .collect()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.series.iter().map(|s| s.values.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, series={}, classes={})",
            self.inner.name,
            self.inner.len(),
            self.inner.num_classes()
        )
    }
}

/// A fitted SFA + prototype network classifier.
#[pyclass(name = "Model", module = "dpsn")]
struct PyModel {
    inner: dpsn::DpsnModel,
}

fn aligned(model: &dpsn::DpsnModel, data: &PyDataset) -> PyResult<dpsn::Dataset> {
    let mut d = data.inner.clone();
    d.align_classes(&model.classes).map_err(to_py)?;
    Ok(d)
}

#[pymethods]
impl PyModel {
    /// Fits on `train`. Without `window_len`/`num_coeffs` both are chosen by
    /// leave-one-out 1-NN grid search on `train`.
    #[staticmethod]
    #[pyo3(signature = (train, window_len = None, num_coeffs = None, seed = 0, epochs = 1000,
                        normalize_features = false, hidden_dim = 256, output_dim = 64))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        train: &PyDataset,
        window_len: Option<usize>,
        num_coeffs: Option<usize>,
        seed: u64,
        epochs: usize,
        normalize_features: bool,
        hidden_dim: usize,
        output_dim: usize,
    ) -> PyResult<Self> {
        let data = &train.inner;
        let cfg = dpsn::TrainConfig {
            seed,
            epochs,
            normalize_features,
            hidden_dim,
            output_dim,
            ..dpsn::TrainConfig::default()
        };
        py.detach(|| {
            let params = match (window_len, num_coeffs) {
                (Some(l), Some(w)) => dpsn::SfaParams::new(l, w),
                _ => {
                    let grid: Vec<(usize, usize)> = [8, 12, 16, 24, 32, 48, 64]
                        .into_iter()
                        .filter(|l| window_len.is_none_or(|w| w == *l))
                        .flat_map(|l| {
                            [2, 3, 4]
                                .into_iter()
                                .filter(move |c| num_coeffs.is_none_or(|w| w == *c))
                                .map(move |c| (l, c))
                        })
                        .collect();
                    harness::grid_search(data, &dpsn::SfaParams::new(1, 1), &grid)?.0
                }
            };
            dpsn::DpsnModel::fit(data, &params, &cfg)
        })
        .map(|(inner, _)| PyModel { inner })
        .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        dpsn::DpsnModel::load_bundle(&path)
            .map(|inner| PyModel { inner })
            .map_err(to_py)
    }

    /// Writes the three-file JSON bundle into `path`.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_bundle(&path).map_err(to_py)
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    /// Histogram dimension D.
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn window_len(&self) -> usize {
        self.inner.sfa.params.window_len
    }

    #[getter]
    fn num_coeffs(&self) -> usize {
        self.inner.sfa.params.num_coeffs
    }

    #[getter]
    fn final_loss(&self) -> f64 {
        self.inner.final_loss
    }

    /// Predicted label of one series.
    fn predict(&self, values: Vec<f64>) -> PyResult<String> {
        let k = self.inner.predict(&values).map_err(to_py)?;
        Ok(self.inner.classes[k].clone())
    }

    /// Class probabilities, ordered as `classes`.
    fn predict_proba(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&values).map_err(to_py)
    }

    fn accuracy(&self, py: Python<'_>, test: &PyDataset) -> PyResult<f64> {
        let test = aligned(&self.inner, test)?;
        py.detach(|| self.inner.accuracy(&test)).map_err(to_py)
    }

    /// Shapelet report as a dict (the same document `dpsn explain` writes).
    #[pyo3(signature = (train, znormalized = false))]
    fn explain<'py>(
        &self,
        py: Python<'py>,
        train: &PyDataset,
        znormalized: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mode = if znormalized {
            DistanceMode::ZNormalized
        } else {
            DistanceMode::Raw
        };
        let report = py
            .detach(|| self.inner.explain(&train.inner, mode))
            .map_err(to_py)?;
        let text = report.to_json().map_err(to_py)?;
        py.import("json")?.call_method1("loads", (text,))
    }

    /// SVG overlay of a class's representative series and shapelet.
    fn shapelet_svg(&self, train: &PyDataset, label: &str) -> PyResult<String> {
        let report = self
            .inner
            .explain(&train.inner, DistanceMode::Raw)
            .map_err(to_py)?;
        let c = report
            .classes
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown class {label:?}")))?;
        let series = &train.inner.series[c.representative_id].values;
        Ok(dpsn::plot::shapelet_svg(
            series,
            &c.shapelet,
            &format!("class {label}"),
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(classes={:?}, dim={}, window_len={}, num_coeffs={})",
            self.inner.classes,
            self.inner.dim(),
            self.inner.sfa.params.window_len,
            self.inner.sfa.params.num_coeffs
        )
    }
}

/// Reads a UCR-format file (label first, tab/comma/space separated).
#[pyfunction]
fn load_ucr(path: PathBuf) -> PyResult<PyDataset> {
    dpsn::load_ucr(&path, dpsn::Delimiter::Auto)
        .map(|inner| PyDataset { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (values, epsilon = DEFAULT_EPSILON))]
fn znormalize(values: Vec<f64>, epsilon: f64) -> PyResult<Vec<f64>> {
    series::znormalize(&values, epsilon).map_err(to_py)
}

#[pyfunction]
fn lowpass_reconstruct(window: Vec<f64>, w: usize) -> PyResult<Vec<f64>> {
    interpret::lowpass_reconstruct(&window, w).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (shapelet, series, znormalized = false))]
fn shapelet_distance(shapelet: Vec<f64>, series: Vec<f64>, znormalized: bool) -> PyResult<f64> {
    let mode = if znormalized {
        DistanceMode::ZNormalized
    } else {
        DistanceMode::Raw
    };
    interpret::shapelet_distance_with(&shapelet, &series, mode).map_err(to_py)
}

/// F statistic of `distances` for `positive` (a label) against the rest.
#[pyfunction]
fn f_score(distances: Vec<f64>, labels: Vec<String>, positive: String) -> PyResult<f64> {
    let mask: Vec<bool> = labels.iter().map(|l| *l == positive).collect();
    interpret::f_test(&distances, &mask)
        .map(|f| f.score)
        .map_err(to_py)
}

#[pymodule(name = "dpsn")]
mod module {
    #[pymodule_export]
    use super::{
        f_score, load_ucr, lowpass_reconstruct, shapelet_distance, znormalize, PyDataset, PyModel,
    };
}
