//! Python bindings for `sdr-core`. Matrices cross the boundary as lists of
//! rows (`list[list[float]]`), vectors as `list[float]`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sdr_core::bench::{run_benchmark, BenchConfig, BenchMethod, BenchSetting, MethodSettings, Pipeline as CorePipeline};
use sdr_core::regression::{mse as core_mse, ols_fit};
use sdr_core::synthetic::{AlignmentCase, SpectrumKind};
use sdr_core::{DMatrix, DVector, Dataset, FittedReducer, Gamma, SdrError};

fn py_err(e: SdrError) -> PyErr {
    match e {
        SdrError::Internal(_) | SdrError::IterationLimit { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != p) {
        return Err(PyValueError::new_err(format!("row {i} has {} entries, expected {p}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Dataset> {
    Dataset::new(matrix(x)?, DVector::from_vec(y)).map_err(py_err)
}

fn gamma(g: Option<f64>) -> PyResult<Option<Gamma>> {
    g.map(|v| Gamma::new(v).map_err(py_err)).transpose()
}

fn settings(k: usize, score: &str, unit_scale: bool) -> PyResult<MethodSettings> {
    let mut s = MethodSettings::new(k);
    s.score = score.parse().map_err(py_err)?;
    s.unit_scale = unit_scale;
    Ok(s)
}

/// A fitted reducer. `reduce` expects data centered the same way as the
/// training data.
#[pyclass(module = "sdr_py", frozen)]
struct Reducer {
    inner: FittedReducer,
}

#[pymethods]
impl Reducer {
    #[getter]
    fn method(&self) -> String {
        self.inner.method().to_string()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    /// `P × K` basis, or `None` for PV and SPPCA.
    fn basis(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.basis().map(rows)
    }

    fn reduce(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.reduce(&matrix(x)?).map_err(py_err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Reducer {
            inner: FittedReducer::from_json(s).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Reducer(method={}, k={}, p={})", self.inner.method(), self.inner.k(), self.inner.p())
    }
}

/// Fits `method` on centered data. BARSHAN, PLS and LSPCA need `gamma`
/// (`float('inf')` gives PCA); OLS has no reducer and is rejected.
#[pyfunction]
#[pyo3(signature = (method, x, y, k, gamma=None, score="pearson"))]
fn fit(method: &str, x: Vec<Vec<f64>>, y: Vec<f64>, k: usize, gamma: Option<f64>, score: &str) -> PyResult<Reducer> {
    let m: BenchMethod = method.parse().map_err(py_err)?;
    let d = dataset(x, y)?;
    let r = sdr_core::bench::fit_reducer(m, &d, self::gamma(gamma)?, &settings(k, score, false)?).map_err(py_err)?;
    let inner = r.ok_or_else(|| PyValueError::new_err("OLS has no reducer; use `ols`"))?;
    Ok(Reducer { inner })
}

/// Centering (optionally [0, 1] scaling), reduction and OLS on the
/// reduced features, all fitted on raw training data.
#[pyclass(module = "sdr_py", frozen)]
struct Pipeline {
    inner: CorePipeline,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (method, x, y, k, gamma=None, score="pearson", unit_scale=false))]
    fn new(
        method: &str,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        k: usize,
        gamma: Option<f64>,
        score: &str,
        unit_scale: bool,
    ) -> PyResult<Self> {
        let m: BenchMethod = method.parse().map_err(py_err)?;
        let d = dataset(x, y)?;
        let inner = CorePipeline::fit(m, &d, self::gamma(gamma)?, &settings(k, score, unit_scale)?).map_err(py_err)?;
        Ok(Pipeline { inner })
    }

    fn features(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.features(&matrix(x)?).map_err(py_err)?))
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let z = self.inner.features(&matrix(x)?).map_err(py_err)?;
        Ok(self.inner.model.predict(&z).map_err(py_err)?.as_slice().to_vec())
    }

    fn mse(&self, x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.mse(&dataset(x, y)?).map_err(py_err)
    }

    #[getter]
    fn reducer(&self) -> Option<Reducer> {
        self.inner.reducer.clone().map(|inner| Reducer { inner })
    }
}

/// Least squares with intercept; returns `(coefficients, intercept)`.
#[pyfunction]
fn ols(z: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let m = ols_fit(&matrix(z)?, &DVector::from_vec(y)).map_err(py_err)?;
    Ok((m.coefficients.as_slice().to_vec(), m.intercept))
}

#[pyfunction]
fn mse(predictions: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    core_mse(&DVector::from_vec(predictions), &DVector::from_vec(truth)).map_err(py_err)
}

/// Runs the synthetic benchmark for one setting and returns the report as
/// JSON.
#[pyfunction]
#[pyo3(signature = (spectrum, alignment, n_train, methods, trials, seed=0, n_test=10_000))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    spectrum: &str,
    alignment: &str,
    n_train: usize,
    methods: Vec<String>,
    trials: usize,
    seed: u64,
    n_test: usize,
) -> PyResult<String> {
    let setting = BenchSetting {
        spectrum: spectrum.parse::<SpectrumKind>().map_err(py_err)?,
        alignment: alignment.parse::<AlignmentCase>().map_err(py_err)?,
        n_train,
    };
    let methods = methods
        .iter()
        .map(|m| m.parse::<BenchMethod>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    let mut cfg = BenchConfig::new(vec![setting], methods, trials, seed);
    cfg.n_test = n_test;
    let report = py.detach(|| run_benchmark(&cfg)).map_err(py_err)?;
    report.to_json().map_err(py_err)
}

#[pymodule]
fn sdr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Reducer>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(ols, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("METHODS", BenchMethod::ALL.iter().map(|b| b.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
