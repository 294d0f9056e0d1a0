//! Python module `emnlms`: the three NLMS filters, scenario generators and
//! the experiment runner.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use emnlms::config::ScenarioConfig;
use emnlms::experiment;
use emnlms::filter::{self, AdaptNlmsState, ConvNlmsState, EmHyper, StepOutcome};
use emnlms::metrics;
use emnlms::sim::{self, RirSpec, SignalStream};

create_exception!(emnlms, EmnlmsError, PyValueError);

fn to_py(err: impl std::fmt::Display) -> PyErr {
    EmnlmsError::new_err(err.to_string())
}

/// `(e, lambda, alpha)`
type Outcome = (f64, f64, f64);

fn outcome(o: StepOutcome) -> Outcome {
    (o.e, o.lambda, o.alpha)
}

/// Streaming EM-NLMS filter.
#[pyclass(name = "EmNlms")]
struct PyEmNlms {
    inner: filter::EmNlms,
}

#[pymethods]
impl PyEmNlms {
    #[new]
    #[pyo3(signature = (taps, c_h0=0.1, c_w0=0.1, c_v0=0.1, eps=0.01))]
    fn new(taps: usize, c_h0: f64, c_w0: f64, c_v0: f64, eps: f64) -> PyResult<Self> {
        let hyper = EmHyper::new(c_v0, c_w0, eps).map_err(to_py)?;
        Ok(Self {
            inner: filter::EmNlms::new(taps, c_h0, hyper).map_err(to_py)?,
        })
    }

    /// One sample; `x` is the regressor, newest sample first.
    fn step(&mut self, x: Vec<f64>, d: f64) -> PyResult<Outcome> {
        self.inner.step(&x, d).map(|r| outcome(r.outcome)).map_err(to_py)
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn c_h(&self) -> f64 {
        self.inner.state().c_h
    }

    #[getter]
    fn c_v(&self) -> f64 {
        self.inner.hyper().c_v
    }

    #[getter]
    fn c_w(&self) -> f64 {
        self.inner.hyper().c_w
    }
}

#[pyclass(name = "AdaptNlms")]
struct PyAdaptNlms {
    state: AdaptNlmsState,
    eps: f64,
}

#[pymethods]
impl PyAdaptNlms {
    #[new]
    #[pyo3(signature = (taps, n_t=5, eta=0.9, e0_sq=0.1, eps=0.01, lambda_cap=None))]
    fn new(
        taps: usize,
        n_t: usize,
        eta: f64,
        e0_sq: f64,
        eps: f64,
        lambda_cap: Option<f64>,
    ) -> PyResult<Self> {
        Ok(Self {
            state: AdaptNlmsState::new(taps, n_t, eta, e0_sq, lambda_cap).map_err(to_py)?,
            eps,
        })
    }

    fn step(&mut self, x: Vec<f64>, d: f64) -> PyResult<Outcome> {
        self.state.step(&x, d, self.eps).map(outcome).map_err(to_py)
    }

    /// Conventional NLMS step with numerator `mu`, used for bootstrapping.
    #[pyo3(signature = (x, d, mu=0.5))]
    fn warm_start_step(&mut self, x: Vec<f64>, d: f64, mu: f64) -> PyResult<Outcome> {
        self.state
            .warm_start_step(&x, d, mu, self.eps)
            .map(outcome)
            .map_err(to_py)
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.state.h_hat.clone()
    }
}

#[pyclass(name = "ConvNlms")]
struct PyConvNlms {
    state: ConvNlmsState,
    eps: f64,
}

#[pymethods]
impl PyConvNlms {
    #[new]
    #[pyo3(signature = (taps, mu=0.5, eps=0.01, gate_threshold=None))]
    fn new(taps: usize, mu: f64, eps: f64, gate_threshold: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            state: ConvNlmsState::new(taps, mu, gate_threshold).map_err(to_py)?,
            eps,
        })
    }

    fn step(&mut self, x: Vec<f64>, d: f64) -> PyResult<Outcome> {
        self.state.step(&x, d, self.eps).map(outcome).map_err(to_py)
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.state.h_hat.clone()
    }
}

#[pyfunction]
#[pyo3(signature = (c_h_prev, c_w, c_v, energy, eps=0.01))]
fn lambda_em(c_h_prev: f64, c_w: f64, c_v: f64, energy: f64, eps: f64) -> f64 {
    filter::lambda_em(c_h_prev, c_w, c_v, energy, eps)
}

#[pyfunction]
fn error_signal(x: Vec<f64>, h_hat: Vec<f64>, d: f64) -> PyResult<f64> {
    filter::error_signal(&x, &h_hat, d).map_err(to_py)
}

#[pyfunction]
fn system_distance_db(h_hat: Vec<f64>, h_true: Vec<f64>) -> PyResult<f64> {
    metrics::system_distance_db(&h_hat, &h_true).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (taps=512, t60=0.1, fs=16000.0, seed=1, pre_delay=0))]
fn synth_rir(taps: usize, t60: f64, fs: f64, seed: u64, pre_delay: usize) -> PyResult<Vec<f64>> {
    sim::synth_rir(&RirSpec {
        taps,
        t60,
        fs,
        seed,
        pre_delay,
    })
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_samples, seed, fs=16000.0))]
fn gen_white_noise(n_samples: usize, seed: u64, fs: f64) -> PyResult<Vec<f64>> {
    sim::gen_white_noise(n_samples, fs, seed)
        .map(|s| s.samples)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_samples, seed, fs=16000.0))]
fn gen_speechlike(n_samples: usize, seed: u64, fs: f64) -> PyResult<Vec<f64>> {
    sim::gen_speechlike(n_samples, fs, seed)
        .map(|s| s.samples)
        .map_err(to_py)
}

/// Returns `(d, clean_echo)`.
#[pyfunction]
#[pyo3(signature = (x, h, snr_db, seed, fs=16000.0))]
fn simulate_microphone(
    x: Vec<f64>,
    h: Vec<f64>,
    snr_db: f64,
    seed: u64,
    fs: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let x = SignalStream::new(x, fs, "x").map_err(to_py)?;
    let mic = sim::simulate_microphone(&x, &h, snr_db, seed).map_err(to_py)?;
    Ok((mic.d.samples, mic.clean_echo.samples))
}

/// Runs a scenario from a config file (or config text) and returns, per
/// algorithm, the final system distance and the per-sample series.
/// With `out_dir`, the CSV traces and summary are written as well.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None, from_text=false))]
fn run_scenario<'py>(
    py: Python<'py>,
    config: &str,
    out_dir: Option<PathBuf>,
    from_text: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let scenario: ScenarioConfig = if from_text {
        config.parse().map_err(to_py)?
    } else {
        ScenarioConfig::from_file(config).map_err(to_py)?
    };
    let output = experiment::run_scenario(&scenario).map_err(to_py)?;
    if let Some(dir) = out_dir {
        experiment::write_artifacts(&scenario, &output, &dir, false).map_err(to_py)?;
    }
    let result = PyDict::new(py);
    for trace in &output.traces {
        let entry = PyDict::new(py);
        entry.set_item("final_delta_h_db", trace.final_delta_h_db())?;
        entry.set_item("delta_h_db", trace.delta_h_db.clone())?;
        entry.set_item("alpha", trace.alpha.clone())?;
        entry.set_item("lambda", trace.lambda.clone())?;
        result.set_item(trace.algo.label(), entry)?;
    }
    Ok(result)
}

#[pymodule]
#[pyo3(name = "emnlms")]
fn emnlms_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EmnlmsError", m.py().get_type::<EmnlmsError>())?;
    m.add_class::<PyEmNlms>()?;
    m.add_class::<PyAdaptNlms>()?;
    m.add_class::<PyConvNlms>()?;
    m.add_function(wrap_pyfunction!(lambda_em, m)?)?;
    m.add_function(wrap_pyfunction!(error_signal, m)?)?;
    m.add_function(wrap_pyfunction!(system_distance_db, m)?)?;
    m.add_function(wrap_pyfunction!(synth_rir, m)?)?;
    m.add_function(wrap_pyfunction!(gen_white_noise, m)?)?;
    m.add_function(wrap_pyfunction!(gen_speechlike, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_microphone, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
