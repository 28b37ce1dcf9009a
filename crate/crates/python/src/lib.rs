//! Python bindings. Results without a dedicated class come back as plain
//! dicts/lists; missing values are `float('nan')`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use ::tsrecon as ts;
use ts::arma::{self, FitReport};
use ts::ccf::CcfMode;
use ts::lagmodel::{ConstantMean, LagSpec, TransferBuilder, TransferOptions};
use ts::pca::ProxyPanel;

create_exception!(tsrecon, TsreconError, PyValueError, "Computation or input error raised by tsrecon.");

fn err(e: ts::Error) -> PyErr {
    TsreconError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => f64::NAN.into_bound_py_any(py)?,
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// Serialize to a Python dict; JSON has no NaN, so missing values map back to nan.
fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

/// An annually indexed series; `nan` marks a missing year.
#[pyclass(name = "TimeSeries", module = "tsrecon", from_py_object)]
#[derive(Clone)]
pub struct PyTimeSeries {
    inner: ts::TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[new]
    fn new(start_time: i64, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: ts::TimeSeries::new(start_time, values).map_err(err)?,
        })
    }

    #[getter]
    fn start_time(&self) -> i64 {
        self.inner.start_time()
    }

    #[getter]
    fn end_time(&self) -> i64 {
        self.inner.end_time()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn times(&self) -> Vec<i64> {
        self.inner.times().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(start_time={}, end_time={}, len={})",
            self.inner.start_time(),
            self.inner.end_time(),
            self.inner.len()
        )
    }

    fn window(&self, from_time: i64, to_time: i64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.window(from_time, to_time).map_err(err)?,
        })
    }

    #[pyo3(signature = (lag = 1))]
    fn difference(&self, lag: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ts::difference(&self.inner, lag).map_err(err)?,
        })
    }
}

fn wrap(inner: ts::TimeSeries) -> PyTimeSeries {
    PyTimeSeries { inner }
}

/// `x_t - mean = sum ar_i (x_{t-i} - mean) + z_t + sum ma_j z_{t-j}`.
#[pyclass(name = "ArmaModel", module = "tsrecon", from_py_object)]
#[derive(Clone)]
pub struct PyArmaModel {
    inner: arma::ArmaModel,
}

#[pymethods]
impl PyArmaModel {
    #[new]
    #[pyo3(signature = (ar = vec![], ma = vec![], mean = 0.0, noise_variance = 1.0))]
    fn new(ar: Vec<f64>, ma: Vec<f64>, mean: f64, noise_variance: f64) -> PyResult<Self> {
        Ok(Self {
            inner: arma::ArmaModel::new(ar, ma, mean, noise_variance).map_err(err)?,
        })
    }

    #[getter]
    fn ar(&self) -> Vec<f64> {
        self.inner.ar.clone()
    }

    #[getter]
    fn ma(&self) -> Vec<f64> {
        self.inner.ma.clone()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean
    }

    #[getter]
    fn noise_variance(&self) -> f64 {
        self.inner.noise_variance
    }

    fn __repr__(&self) -> String {
        format!(
            "ArmaModel(ar={:?}, ma={:?}, mean={}, noise_variance={})",
            self.inner.ar, self.inner.ma, self.inner.mean, self.inner.noise_variance
        )
    }

    /// Simulate `n` values starting at time 0.
    #[pyo3(signature = (n, seed = 0))]
    fn simulate(&self, n: usize, seed: u64) -> PyResult<PyTimeSeries> {
        Ok(wrap(arma::simulate(&self.inner, n, seed).map_err(err)?))
    }

    fn log_likelihood(&self, series: &PyTimeSeries) -> PyResult<f64> {
        arma::log_likelihood(&self.inner, &series.inner).map_err(err)
    }

    fn innovation_residuals(&self, series: &PyTimeSeries) -> PyResult<PyTimeSeries> {
        Ok(wrap(arma::innovation_residuals(&self.inner, &series.inner).map_err(err)?))
    }
}

fn fit_report<'py>(py: Python<'py>, r: &FitReport) -> PyResult<Bound<'py, PyAny>> {
    let d = to_py(py, r)?;
    d.set_item("model", PyArmaModel { inner: r.model.clone() })?;
    d.set_item("residuals", wrap(r.residuals.clone()))?;
    Ok(d)
}

fn fitted(series: &ts::TimeSeries, order: Option<(usize, usize)>, p_max: usize, q_max: usize) -> PyResult<FitReport> {
    match order {
        Some((p, q)) => arma::fit(series, p, q).map_err(err),
        None => Ok(arma::select_order(series, p_max, q_max).map_err(err)?.2),
    }
}

#[pyfunction]
fn sample_acf<'py>(py: Python<'py>, series: &PyTimeSeries, max_lag: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ts::sample_acf(&series.inner, max_lag).map_err(err)?)
}

/// Exact-likelihood ARMA fit; with `order=None` the AICc-best order up to `(p_max, q_max)`.
#[pyfunction]
#[pyo3(signature = (series, order = None, p_max = 3, q_max = 3))]
fn fit_arma<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    order: Option<(usize, usize)>,
    p_max: usize,
    q_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    fit_report(py, &fitted(&series.inner, order, p_max, q_max)?)
}

#[pyfunction]
#[pyo3(signature = (series, order = None, p_max = 3, q_max = 3))]
fn whiten(series: &PyTimeSeries, order: Option<(usize, usize)>, p_max: usize, q_max: usize) -> PyResult<PyTimeSeries> {
    let r = fitted(&series.inner, order, p_max, q_max)?;
    Ok(wrap(arma::whiten(&series.inner, &r).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (series, lags, fitted_params = 0))]
fn ljung_box<'py>(py: Python<'py>, series: &PyTimeSeries, lags: usize, fitted_params: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &arma::ljung_box(&series.inner, lags, fitted_params).map_err(err)?)
}

#[pyfunction]
fn residual_diagnostics<'py>(py: Python<'py>, residuals: &PyTimeSeries) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &arma::residual_diagnostics(&residuals.inner).map_err(err)?)
}

fn ccf_dict<'py>(py: Python<'py>, r: &ts::CcfResult) -> PyResult<Bound<'py, PyAny>> {
    let d = to_py(py, r)?;
    let sig: Vec<(i64, f64)> = ts::significant_lags(r);
    d.set_item("significant", sig)?;
    Ok(d)
}

/// `corr(y_{t+h}, x_t)` for `h` in `-max_lag..=max_lag`; `h > 0` means `x` leads.
#[pyfunction]
fn cross_correlation<'py>(py: Python<'py>, x: &PyTimeSeries, y: &PyTimeSeries, max_lag: usize) -> PyResult<Bound<'py, PyAny>> {
    ccf_dict(py, &ts::cross_correlation(&x.inner, &y.inner, max_lag).map_err(err)?)
}

/// Mode is "raw", "prewhitened-x" or "prewhitened-both".
#[pyfunction]
#[pyo3(signature = (x, y, max_lag, p_max = 3, q_max = 2, mode = "prewhitened-x"))]
fn prewhitened_ccf<'py>(
    py: Python<'py>,
    x: &PyTimeSeries,
    y: &PyTimeSeries,
    max_lag: usize,
    p_max: usize,
    q_max: usize,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: CcfMode = mode.parse().map_err(err)?;
    ccf_dict(py, &ts::prewhitened_ccf(&x.inner, &y.inner, max_lag, p_max, q_max, mode).map_err(err)?)
}

/// Principal components of a panel given as `[(proxy_id, values), ...]` sharing `start_time`.
#[pyfunction]
#[pyo3(signature = (start_time, columns, k, standardize = true))]
fn pca<'py>(
    py: Python<'py>,
    start_time: i64,
    columns: Vec<(String, Vec<f64>)>,
    k: usize,
    standardize: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let panel = ProxyPanel::from_columns(start_time, columns).map_err(err)?;
    let d = ts::decompose(&panel, k, standardize).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("k", d.k())?;
    out.set_item("standardized", d.standardized)?;
    out.set_item("proxy_ids", d.proxy_ids.clone())?;
    out.set_item("explained_variance", d.explained_variance.clone())?;
    out.set_item("total_variance", d.total_variance)?;
    out.set_item("imputed_count", d.imputed_count)?;
    let loadings: Vec<Vec<f64>> = (0..d.k()).map(|c| d.loadings.column(c).iter().copied().collect()).collect();
    out.set_item("loadings", loadings)?;
    let scores: Vec<PyTimeSeries> = (0..d.k())
        .map(|c| ts::score_series(&d, c).map(wrap))
        .collect::<ts::Result<_>>()
        .map_err(err)?;
    out.set_item("scores", scores)?;
    Ok(out.into_any())
}

#[pyfunction]
#[pyo3(signature = (series, max_breaks = 3, max_order = 2, min_seg_len = 10))]
fn segment<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    max_breaks: usize,
    max_order: usize,
    min_seg_len: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ts::segment(&series.inner, max_breaks, max_order, min_seg_len).map_err(err)?)
}

#[pyfunction]
fn mdl_score(series: &PyTimeSeries, breakpoints: Vec<usize>, orders: Vec<usize>) -> PyResult<f64> {
    ts::mdl_score(&series.inner, &breakpoints, &orders).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (y, x, max_lag, prewhiten = true))]
fn lag_scan<'py>(py: Python<'py>, y: &PyTimeSeries, x: &PyTimeSeries, max_lag: usize, prewhiten: bool) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ts::lag_scan(&y.inner, &x.inner, max_lag, prewhiten).map_err(err)?)
}

/// Covariates are `(series, label, offsets)`; offset `l` regresses `y_t` on `x_{t+l}`.
fn specs(covariates: Vec<(PyTimeSeries, String, Vec<i64>)>) -> PyResult<Vec<(ts::TimeSeries, LagSpec)>> {
    covariates
        .into_iter()
        .map(|(s, label, offsets)| Ok((s.inner, LagSpec::new(label, offsets).map_err(err)?)))
        .collect()
}

/// Regression on lagged covariates with ARMA(p, q) errors.
#[pyclass(name = "TransferModel", module = "tsrecon", skip_from_py_object)]
pub struct PyTransferModel {
    inner: ts::TransferModel,
}

#[pymethods]
impl PyTransferModel {
    #[getter]
    fn equation(&self) -> String {
        self.inner.equation.clone()
    }

    #[getter]
    fn intercept(&self) -> Option<f64> {
        self.inner.intercept
    }

    #[getter]
    fn coefficients(&self) -> Vec<(String, i64, f64)> {
        self.inner.terms.iter().map(|t| (t.label.clone(), t.offset, t.coefficient)).collect()
    }

    #[getter]
    fn noise(&self) -> PyArmaModel {
        PyArmaModel { inner: self.inner.noise.clone() }
    }

    #[getter]
    fn residuals(&self) -> PyTimeSeries {
        wrap(self.inner.residuals.clone())
    }

    #[getter]
    fn aicc(&self) -> f64 {
        self.inner.aicc
    }

    fn __repr__(&self) -> String {
        format!("TransferModel({:?})", self.inner.equation)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    /// Mean and standard errors over `from_time..=to_time`, before, inside or after the fit window.
    fn predict<'py>(&self, py: Python<'py>, covariates: Vec<PyTimeSeries>, from_time: i64, to_time: i64) -> PyResult<Bound<'py, PyAny>> {
        let xs: Vec<ts::TimeSeries> = covariates.into_iter().map(|s| s.inner).collect();
        let p = ts::predict(&self.inner, &xs, from_time, to_time).map_err(err)?;
        let d = to_py(py, &p)?;
        d.set_item("mean", wrap(p.mean))?;
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (y, covariates, p = 0, q = 0, intercept = true))]
fn fit_transfer(
    y: &PyTimeSeries,
    covariates: Vec<(PyTimeSeries, String, Vec<i64>)>,
    p: usize,
    q: usize,
    intercept: bool,
) -> PyResult<PyTransferModel> {
    let cov = specs(covariates)?;
    let inner = ts::lagmodel::fit_transfer_with(&y.inner, &cov, p, q, TransferOptions { intercept }).map_err(err)?;
    Ok(PyTransferModel { inner })
}

/// Block holdout of a lagged regression; with no covariates, the constant-mean baseline.
#[pyfunction]
#[pyo3(signature = (y, covariates, blocks, p = 0, q = 0, intercept = true))]
fn holdout_eval<'py>(
    py: Python<'py>,
    y: &PyTimeSeries,
    covariates: Vec<(PyTimeSeries, String, Vec<i64>)>,
    blocks: Vec<(i64, i64)>,
    p: usize,
    q: usize,
    intercept: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let report = if covariates.is_empty() {
        ts::holdout_eval(&y.inner, &ConstantMean, &blocks)
    } else {
        let mut builder = TransferBuilder::new(specs(covariates)?, p, q);
        builder.options = TransferOptions { intercept };
        ts::holdout_eval(&y.inner, &builder, &blocks)
    }
    .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (n, step_sd = 0.02, noise_sd = 1.0, seed = 0))]
fn random_walk_plus_noise(n: usize, step_sd: f64, noise_sd: f64, seed: u64) -> PyResult<PyTimeSeries> {
    Ok(wrap(ts::synthetic::random_walk_plus_noise(n, step_sd, noise_sd, seed).map_err(err)?))
}

#[pymodule]
fn tsrecon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TsreconError", m.py().get_type::<TsreconError>())?;
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyArmaModel>()?;
    m.add_class::<PyTransferModel>()?;
    m.add_function(wrap_pyfunction!(sample_acf, m)?)?;
    m.add_function(wrap_pyfunction!(fit_arma, m)?)?;
    m.add_function(wrap_pyfunction!(whiten, m)?)?;
    m.add_function(wrap_pyfunction!(ljung_box, m)?)?;
    m.add_function(wrap_pyfunction!(residual_diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(cross_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(prewhitened_ccf, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(mdl_score, m)?)?;
    m.add_function(wrap_pyfunction!(lag_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(holdout_eval, m)?)?;
    m.add_function(wrap_pyfunction!(random_walk_plus_noise, m)?)?;
    Ok(())
}
