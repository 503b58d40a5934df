//! Python bindings: targets, sampler steps and chains, over-relaxation and diagnostics.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dhams_core::analysis;
use dhams_core::experiment;
use dhams_core::overrelax::{self, CdfTable};
use dhams_core::samplers;
use dhams_core::targets::{self, EquiCorrGaussianSpec, GradientMode, MixtureSpec, RegressionSpec};
use dhams_core::{ChainState, Error, SamplerKind, TargetModel};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::EnumerationCap { .. } | Error::ZeroProbability(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kind_of(name: &str) -> PyResult<SamplerKind> {
    name.parse::<SamplerKind>().map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Seeded ChaCha20 stream; `(seed, stream)` pairs give independent streams.
#[pyclass(name = "Rng")]
struct PyRng {
    inner: dhams_core::RngStream,
}

#[pymethods]
impl PyRng {
    #[new]
    #[pyo3(signature = (seed, stream = 0))]
    fn new(seed: u64, stream: u64) -> Self {
        Self { inner: dhams_core::RngStream::new(seed, stream) }
    }

    fn uniform(&mut self) -> f64 {
        self.inner.uniform()
    }

    fn std_normal(&mut self) -> f64 {
        self.inner.std_normal()
    }

    fn split(&mut self) -> Self {
        Self { inner: self.inner.split() }
    }
}

#[pyclass(name = "SamplerParams", get_all, set_all)]
struct PyParams {
    delta: f64,
    epsilon: f64,
    phi: f64,
    beta: f64,
    window_r: usize,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (delta = 1.0, epsilon = 0.9, phi = 0.0, beta = 1.0, window_r = 1))]
    fn new(delta: f64, epsilon: f64, phi: f64, beta: f64, window_r: usize) -> PyResult<Self> {
        let p = Self { delta, epsilon, phi, beta, window_r };
        p.to_core()?;
        Ok(p)
    }

    fn __repr__(&self) -> String {
        format!(
            "SamplerParams(delta={}, epsilon={}, phi={}, beta={}, window_r={})",
            self.delta, self.epsilon, self.phi, self.beta, self.window_r
        )
    }
}

impl PyParams {
    fn to_core(&self) -> PyResult<dhams_core::SamplerParams> {
        let p = dhams_core::SamplerParams {
            delta: self.delta,
            epsilon: self.epsilon,
            phi: self.phi,
            beta: self.beta,
            window_r: self.window_r,
            hamming_radius: 1,
        };
        p.validate().map_err(py_err)?;
        Ok(p)
    }
}

/// A lattice target `π(s) ∝ exp(f(s))`.
#[pyclass(name = "Target", frozen)]
struct PyTarget {
    inner: Arc<dyn TargetModel>,
}

#[pymethods]
impl PyTarget {
    #[staticmethod]
    fn discrete_gaussian(dim: usize, k: usize, sigma: f64, rho: f64) -> PyResult<Self> {
        let t = targets::discrete_gaussian(&EquiCorrGaussianSpec { dim, k, sigma, rho }).map_err(py_err)?;
        Ok(Self { inner: Arc::new(t) })
    }

    #[staticmethod]
    fn quadratic_mixture(
        dim: usize,
        k: usize,
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let t = targets::quadratic_mixture(&MixtureSpec { dim, k, means, covariances }).map_err(py_err)?;
        Ok(Self { inner: Arc::new(t) })
    }

    #[staticmethod]
    fn linear(coefficients: Vec<f64>, support: Vec<f64>) -> PyResult<Self> {
        let t = targets::linear_product(coefficients, support).map_err(py_err)?;
        Ok(Self { inner: Arc::new(t) })
    }

    /// Variable-selection posterior over inclusion masks, with default hyper-parameters.
    #[staticmethod]
    #[pyo3(signature = (x, y, exact_gradient = false))]
    fn regression(x: Vec<Vec<f64>>, y: Vec<f64>, exact_gradient: bool) -> PyResult<Self> {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("rows of x must have equal length"));
        }
        let xm = nalgebra::DMatrix::from_fn(n, d, |i, j| x[i][j]);
        let spec = RegressionSpec::with_defaults(xm, nalgebra::DVector::from_vec(y)).map_err(py_err)?;
        let mode = if exact_gradient { GradientMode::Exact } else { GradientMode::ColumnRestricted };
        let t = targets::regression_posterior(spec, mode).map_err(py_err)?;
        Ok(Self { inner: Arc::new(t) })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn support(&self) -> Vec<f64> {
        self.inner.lattice().support().to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn potential(&self, s: Vec<f64>) -> PyResult<f64> {
        self.inner.lattice().check_dim(s.len()).map_err(py_err)?;
        Ok(self.inner.potential(&s))
    }

    fn gradient(&self, s: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.lattice().check_dim(s.len()).map_err(py_err)?;
        Ok(self.inner.gradient(&s))
    }

    /// Normalized probabilities of every lattice point, last coordinate varying fastest.
    #[pyo3(signature = (cap = dhams_core::DEFAULT_ENUMERATION_CAP))]
    fn exact_joint(&self, cap: u64) -> PyResult<Vec<f64>> {
        Ok(analysis::exact_joint(self.inner.as_ref(), cap).map_err(py_err)?.probs().to_vec())
    }
}

/// One sampler step from `(s, u)`. Returns the proposal, log acceptance ratio and next state.
#[pyfunction]
#[pyo3(signature = (kind, target, s, params, rng, u = None))]
fn step<'py>(
    py: Python<'py>,
    kind: &str,
    target: &PyTarget,
    s: Vec<f64>,
    params: &PyParams,
    rng: &mut PyRng,
    u: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = kind_of(kind)?;
    let u = u.unwrap_or_else(|| vec![0.0; s.len()]);
    let state = ChainState::new(s, u);
    let out = samplers::step(kind, target.inner.as_ref(), &state, &params.to_core()?, &mut rng.inner)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("proposal_s", out.proposal_s)?;
    d.set_item("proposal_u", out.proposal_u)?;
    d.set_item("log_accept_ratio", out.log_accept_ratio)?;
    d.set_item("accepted", out.accepted)?;
    d.set_item("s", out.next.s)?;
    d.set_item("u", out.next.u)?;
    Ok(d)
}

/// Runs one chain from a uniform random start on stream `(seed, stream)`.
#[pyfunction]
#[pyo3(signature = (kind, target, params, burn_in, draws, seed, stream = 0))]
#[allow(clippy::too_many_arguments)]
fn run_chain<'py>(
    py: Python<'py>,
    kind: &str,
    target: &PyTarget,
    params: &PyParams,
    burn_in: usize,
    draws: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = kind_of(kind)?;
    let params = params.to_core()?;
    let t = Arc::clone(&target.inner);
    let rec = py
        .detach(move || {
            let mut rng = dhams_core::RngStream::new(seed, stream);
            samplers::run_chain(kind, t.as_ref(), &params, burn_in, draws, &mut rng)
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("states", rec.states().map(<[f64]>::to_vec).collect::<Vec<_>>())?;
    let momenta: Option<Vec<Vec<f64>>> =
        rec.has_momentum().then(|| (0..rec.len()).map(|t| rec.momentum(t).unwrap().to_vec()).collect());
    d.set_item("momenta", momenta)?;
    d.set_item("potentials", rec.potentials().to_vec())?;
    d.set_item("accepted", rec.accepted().to_vec())?;
    Ok(d)
}

/// Exact over-relaxation transition matrix for reference probabilities `probs`.
#[pyfunction]
fn transition_matrix(probs: Vec<f64>, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let cdf = CdfTable::from_probs(&probs).map_err(py_err)?;
    overrelax::transition_matrix(&cdf, beta).map_err(py_err)
}

/// One over-relaxed draw from cell `x0`.
#[pyfunction]
fn sample_overrelaxed(x0: usize, probs: Vec<f64>, beta: f64, rng: &mut PyRng) -> PyResult<usize> {
    let cdf = CdfTable::from_probs(&probs).map_err(py_err)?;
    Ok(overrelax::sample_overrelaxed(x0, &cdf, beta, &mut rng.inner).map_err(py_err)?.x1)
}

#[pyfunction]
fn correlation_at_beta(beta: f64, n_samples: usize, rng: &mut PyRng) -> PyResult<f64> {
    overrelax::correlation_at_beta(beta, n_samples, &mut rng.inner).map_err(py_err)
}

/// Multi-chain effective sample size of a scalar quantity, one list per chain.
#[pyfunction]
fn ess(chains: Vec<Vec<f64>>) -> PyResult<f64> {
    analysis::ess_multichain(&chains).map_err(py_err)
}

/// Runs a JSON experiment config and returns the run summary.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = experiment::parse_config_str(config_json).map_err(py_err)?;
    let s = py.detach(move || experiment::run_experiment(&cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("output_dir", s.output_dir.display().to_string())?;
    d.set_item("acceptance_rates", s.acceptance_rates)?;
    d.set_item("average_flips", s.average_flips)?;
    d.set_item("wall_time_seconds", s.wall_time_seconds)?;
    d.set_item(
        "files",
        s.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

#[pymodule]
fn dhams(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRng>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyTarget>()?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(transition_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(sample_overrelaxed, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_at_beta, m)?)?;
    m.add_function(wrap_pyfunction!(ess, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("SAMPLERS", SamplerKind::ALL.iter().map(|k| k.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
