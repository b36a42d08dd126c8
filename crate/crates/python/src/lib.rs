//! Python bindings for the TOMO sampler, FWTNB classifier and evaluation
//! utilities.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use cpdp_core::dataset::{self, DefectDataset, DEFAULT_BUG_COLUMN};
use cpdp_core::eval;
use cpdp_core::fwtnb::{FwtnbModel, SimilarityMode};
use cpdp_core::harness::{runner, ExperimentConfig, Method};
use cpdp_core::mic::{self, MineParams};
use cpdp_core::sampling::{self, TomoParams};
use cpdp_core::Error;

create_exception!(cpdp, CpdpError, PyException);

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => CpdpError::new_err(other.to_string()),
    }
}

/// A labelled defect dataset.
#[pyclass(name = "Dataset", module = "cpdp")]
struct PyDataset {
    inner: DefectDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, labels, name = "dataset".to_string(), feature_names = None))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, name: String, feature_names: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match feature_names {
            Some(f) => DefectDataset::new(name, f, rows, labels),
            None => DefectDataset::from_rows(name, rows, labels),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    /// Loads a PROMISE-style CSV.
    #[staticmethod]
    #[pyo3(signature = (path, bug_column = DEFAULT_BUG_COLUMN.to_string(), prepared = false))]
    fn load(path: std::path::PathBuf, bug_column: String, prepared: bool) -> PyResult<Self> {
        let inner = if prepared {
            dataset::load_prepared(&path, &bug_column)
        } else {
            dataset::load_promise_csv(&path, &bug_column)
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    /// Drops rows with missing values and duplicate rows.
    fn clean(&self) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::clean(&self.inner).map_err(err)?,
        })
    }

    fn log_transform(&self) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::log_transform(&self.inner).map_err(err)?,
        })
    }

    /// `(n_metrics, n_instances, n_defective, defective_rate)`.
    fn stats(&self) -> (usize, usize, usize, f64) {
        let s = dataset::summarize(&self.inner);
        (s.n_metrics, s.n_instances, s.n_defective, s.defective_rate)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, rows={}, features={}, defective={})",
            self.inner.name,
            self.inner.n_rows(),
            self.inner.n_features(),
            self.inner.n_defective()
        )
    }
}

/// A trained feature-weighted transfer naive Bayes model.
#[pyclass(name = "Model", module = "cpdp")]
struct PyModel {
    inner: FwtnbModel,
    feature_weighted: bool,
}

#[pymethods]
impl PyModel {
    /// Predicted labels for raw (log-transformed) rows.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<u8>> {
        rows.iter()
            .map(|r| self.inner.predict_raw(r, self.feature_weighted).map(|p| p.label))
            .collect::<Result<_, _>>()
            .map_err(err)
    }

    /// Class posteriors `[clean, defective]` for raw rows.
    fn predict_proba(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<[f64; 2]>> {
        rows.iter()
            .map(|r| self.inner.predict_raw(r, self.feature_weighted).map(|p| p.posterior))
            .collect::<Result<_, _>>()
            .map_err(err)
    }

    #[getter]
    fn priors(&self) -> [f64; 2] {
        self.inner.priors
    }

    #[getter]
    fn mic(&self) -> Vec<f64> {
        self.inner.mic.mic.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, feature_weighted = true))]
    fn from_json(text: &str, feature_weighted: bool) -> PyResult<Self> {
        Ok(Self {
            inner: FwtnbModel::from_json(text).map_err(err)?,
            feature_weighted,
        })
    }
}

/// Maximal information coefficient between two equal-length vectors.
#[pyfunction]
#[pyo3(signature = (x, y, alpha = 0.6, c = 15))]
fn mic_score(x: Vec<f64>, y: Vec<f64>, alpha: f64, c: usize) -> PyResult<f64> {
    mic::mic_score(&x, &y, &MineParams { alpha, c }).map_err(err)
}

/// Entropy-MDL cut points for one feature.
#[pyfunction]
fn mdlp_cuts(values: Vec<f64>, labels: Vec<u8>) -> PyResult<Vec<f64>> {
    cpdp_core::discretize::fit_mdlp(&values, &labels).map_err(err)
}

/// TOMO synthetic minority rows for `source` pulled toward `target_rows`.
/// Returns `(rows, [(base_row, neighbor_row, r), ...])`.
#[pyfunction]
#[pyo3(signature = (source, target_rows, ratio = 1.0, lambda_ = 0.4, seed = 0, interpolate = false))]
#[allow(clippy::type_complexity)]
fn tomo(
    source: &PyDataset,
    target_rows: Vec<Vec<f64>>,
    ratio: f64,
    lambda_: f64,
    seed: u64,
    interpolate: bool,
) -> PyResult<(Vec<Vec<f64>>, Vec<(usize, usize, f64)>)> {
    let params = TomoParams {
        ratio,
        lambda: lambda_,
        seed,
        interpolate,
    };
    let batch = sampling::tomo(&source.inner, &target_rows, &params).map_err(err)?;
    let prov = batch.provenance.iter().map(|o| (o.base, o.neighbor, o.r)).collect();
    Ok((batch.rows, prov))
}

/// SMOTE synthetic rows from a minority matrix.
#[pyfunction]
#[pyo3(signature = (minority, percent = 100, k = 5, seed = 0))]
fn smote(minority: Vec<Vec<f64>>, percent: usize, k: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(sampling::smote(&minority, percent, k, seed).map_err(err)?.rows)
}

/// Rebalances and trains on `source` for prediction on `target_rows`.
/// Both inputs should already be cleaned and log-transformed.
#[pyfunction]
#[pyo3(signature = (source, target_rows, method = "tomofwtnb", ratio = 1.0, lambda_ = 0.4, sigma = 1.0, seed = 0, normalized_similarity = false))]
#[allow(clippy::too_many_arguments)]
fn train(
    source: &PyDataset,
    target_rows: Vec<Vec<f64>>,
    method: &str,
    ratio: f64,
    lambda_: f64,
    sigma: f64,
    seed: u64,
    normalized_similarity: bool,
) -> PyResult<PyModel> {
    let mut cfg = ExperimentConfig::new(".");
    cfg.method = method.parse::<Method>().map_err(err)?;
    cfg.ratio = ratio;
    cfg.lambda = lambda_;
    cfg.sigma = sigma;
    cfg.similarity = if normalized_similarity {
        SimilarityMode::Normalized
    } else {
        SimilarityMode::Unnormalized
    };
    cfg.validate().map_err(err)?;
    let p = runner::train_pipeline(&source.inner, &target_rows, &cfg, seed).map_err(err)?;
    Ok(PyModel {
        feature_weighted: p.classifier == cpdp_core::harness::Classifier::Fwtnb,
        inner: p.model,
    })
}

/// `{"pd", "pf", "g_measure", "mcc"}` for true and predicted labels.
#[pyfunction]
fn metrics(actual: Vec<u8>, predicted: Vec<u8>) -> PyResult<std::collections::BTreeMap<&'static str, f64>> {
    let r = eval::metrics(&eval::confusion(&actual, &predicted).map_err(err)?);
    Ok([("pd", r.pd), ("pf", r.pf), ("g_measure", r.g_measure), ("mcc", r.mcc)].into())
}

/// Two-sided Wilcoxon rank-sum p-value.
#[pyfunction]
fn wilcoxon_ranksum(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    eval::wilcoxon_ranksum(&a, &b).map_err(err)
}

/// Cliff's delta and its effect-size label.
#[pyfunction]
fn cliffs_delta(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, String)> {
    let (d, e) = eval::cliffs_delta(&a, &b).map_err(err)?;
    Ok((d, e.to_string()))
}

/// Verdict of `a` against `b`: "win", "tie" or "lose".
#[pyfunction]
fn win_tie_lose(a: Vec<f64>, b: Vec<f64>) -> PyResult<String> {
    Ok(eval::win_tie_lose(&a, &b).map_err(err)?.to_string())
}

#[pymodule]
pub fn cpdp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CpdpError", m.py().get_type::<CpdpError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(mic_score, m)?)?;
    m.add_function(wrap_pyfunction!(mdlp_cuts, m)?)?;
    m.add_function(wrap_pyfunction!(tomo, m)?)?;
    m.add_function(wrap_pyfunction!(smote, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_ranksum, m)?)?;
    m.add_function(wrap_pyfunction!(cliffs_delta, m)?)?;
    m.add_function(wrap_pyfunction!(win_tie_lose, m)?)?;
    Ok(())
}
