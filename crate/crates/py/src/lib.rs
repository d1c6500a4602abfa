//! Python extension module exposing the main types and operations: the
//! dense network, Gaussian policies, environments with scripted
//! demonstrators, the k-NN divergence estimators, simplex search, and the
//! full lifelong runner.
//!
//! Build with `cargo build -p flair-py --release`, then copy or symlink
//! `target/release/libflair_forge.so` to `flair_forge.so` somewhere on
//! `sys.path` (see `python/smoke_test.py`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use flair_core::config::ExperimentConfig;
use flair_core::demo::{available_styles, generate_demo_set, scripted_controller, ArrivalOrder};
use flair_core::divergence::{self, SampleCloud};
use flair_core::env::{ActionSource, EnvSpec, EnvState};
use flair_core::mixture;
use flair_core::nn::MlpParams;
use flair_core::policy::GaussianPolicy;
use flair_core::rng::{derive_rng, Stream};
use flair_core::trajectory::Trajectory;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Dense two-hidden-layer network with identity output.
#[pyclass(name = "Mlp")]
struct PyMlp {
    inner: MlpParams,
}

#[pymethods]
impl PyMlp {
    #[new]
    fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        PyMlp {
            inner: MlpParams::init(input, hidden, output, seed),
        }
    }

    fn forward(&self, input: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&input).map_err(err)
    }

    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mlp(input={}, hidden={}, output={}, params={})",
            self.inner.input_dim(),
            self.inner.hidden_dim(),
            self.inner.output_dim(),
            self.inner.num_params()
        )
    }
}

/// Diagonal-Gaussian policy over a dense mean network.
#[pyclass(name = "Policy")]
struct PyPolicy {
    inner: GaussianPolicy,
}

#[pymethods]
impl PyPolicy {
    #[new]
    fn new(state_dim: usize, action_dim: usize, hidden: usize, seed: u64) -> Self {
        PyPolicy {
            inner: GaussianPolicy::new(state_dim, action_dim, hidden, seed),
        }
    }

    fn mean_action(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.mean_action(&state).map_err(err)
    }

    fn sample_action(&self, state: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
        let mut rng = derive_rng(seed, Stream::Rollout, &[]);
        self.inner.sample_action(&state, &mut rng).map_err(err)
    }

    fn log_prob(&self, state: Vec<f64>, action: Vec<f64>) -> PyResult<f64> {
        self.inner.log_prob(&state, &action).map_err(err)
    }
}

/// Fixed-horizon environment with ground-truth task reward.
#[pyclass(name = "Env")]
struct PyEnv {
    spec: EnvSpec,
}

#[pymethods]
impl PyEnv {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(PyEnv {
            spec: EnvSpec::by_name(name).map_err(err)?,
        })
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.spec.state_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.spec.action_dim()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn reset(&self, seed: u64) -> Vec<f64> {
        self.spec.reset(seed).vec
    }

    /// One transition from an explicit state; returns (next_state, reward).
    fn step(&self, state: Vec<f64>, step_index: usize, action: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let env_state = EnvState {
            vec: state,
            step: step_index,
        };
        let (next, reward) = self.spec.step(&env_state, &action).map_err(err)?;
        Ok((next.vec, reward))
    }

    /// Styles available to the scripted demonstrators.
    fn styles(&self) -> Vec<String> {
        available_styles(&self.spec)
            .iter()
            .map(|s| s.label())
            .collect()
    }

    /// Roll out the scripted controller for a style index; returns
    /// (states, actions, rewards).
    fn rollout_style(
        &self,
        style_index: usize,
        seed: u64,
    ) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
        let styles = available_styles(&self.spec);
        let style = *styles
            .get(style_index)
            .ok_or_else(|| PyValueError::new_err("style index out of range"))?;
        let controller = scripted_controller(&self.spec, style).map_err(err)?;
        let t = self.spec.rollout(&controller, seed).map_err(err)?;
        Ok((t.states, t.actions, t.rewards))
    }

    /// Roll out a Gaussian policy; returns (states, actions, rewards).
    fn rollout_policy(
        &self,
        policy: &PyPolicy,
        seed: u64,
    ) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
        let t = self.spec.rollout(&policy.inner, seed).map_err(err)?;
        Ok((t.states, t.actions, t.rewards))
    }
}

/// Kozachenko-Leonenko entropy estimate of a point cloud.
#[pyfunction]
fn knn_entropy(points: Vec<Vec<f64>>, k: usize) -> PyResult<f64> {
    let cloud = SampleCloud::new(points).map_err(err)?;
    divergence::knn_entropy(&cloud, k).map_err(err)
}

/// k-NN KL divergence estimate between two point clouds.
#[pyfunction]
fn estimate_kl(p: Vec<Vec<f64>>, q: Vec<Vec<f64>>, k: usize) -> PyResult<f64> {
    let p = SampleCloud::new(p).map_err(err)?;
    let q = SampleCloud::new(q).map_err(err)?;
    divergence::estimate_kl(&p, &q, k).map_err(err)
}

/// KL between a demonstration's state marginal and pooled rollout states.
#[pyfunction]
fn trajectory_kl(
    demo_states: Vec<Vec<f64>>,
    rollout_states: Vec<Vec<Vec<f64>>>,
    k: usize,
) -> PyResult<f64> {
    let to_traj = |states: Vec<Vec<f64>>| -> PyResult<Trajectory> {
        let n = states.len();
        if n < 2 {
            return Err(PyValueError::new_err("need at least two states"));
        }
        let d_a = 1;
        Trajectory::new(states, vec![vec![0.0; d_a]; n - 1], vec![0.0; n - 1]).map_err(err)
    };
    let demo = to_traj(demo_states)?;
    let rollouts: Vec<Trajectory> = rollout_states
        .into_iter()
        .map(to_traj)
        .collect::<PyResult<_>>()?;
    divergence::trajectory_kl(&demo, &rollouts, k).map_err(err)
}

/// Flat-Dirichlet sample on the probability simplex.
#[pyfunction]
fn sample_simplex(m: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut rng = derive_rng(seed, Stream::MixtureSearch, &[]);
    Ok(mixture::sample_simplex(m, &mut rng)
        .map_err(err)?
        .as_slice()
        .to_vec())
}

/// Mixture action at a state: weighted sum of per-policy samples.
#[pyfunction]
fn mixture_action(
    policies: Vec<PyRef<PyPolicy>>,
    weights: Vec<f64>,
    state: Vec<f64>,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let owned: Vec<GaussianPolicy> = policies.iter().map(|p| p.inner.clone()).collect();
    let w = mixture::MixtureWeights::new(weights).map_err(err)?;
    let policy = mixture::MixturePolicy::new(&owned, &w).map_err(err)?;
    let mut rng = derive_rng(seed, Stream::MixtureSearch, &[]);
    policy.act(&state, &mut rng).map_err(err)
}

/// Write a demonstration file; returns the number of records.
#[pyfunction]
#[pyo3(signature = (env, pure, mixtures, seed, path, shuffled = false))]
fn gen_demos(
    env: &str,
    pure: usize,
    mixtures: usize,
    seed: u64,
    path: &str,
    shuffled: bool,
) -> PyResult<usize> {
    let spec = EnvSpec::by_name(env).map_err(err)?;
    let order = if shuffled {
        ArrivalOrder::Shuffled
    } else {
        ArrivalOrder::PureFirst
    };
    let set = generate_demo_set(&spec, pure, mixtures, seed, order).map_err(err)?;
    flair_core::demo::write_demo_set(std::path::Path::new(path), &set).map_err(err)?;
    Ok(set.records.len())
}

/// Default experiment config for an environment, as a JSON string.
#[pyfunction]
fn default_config(env: &str) -> PyResult<String> {
    let config = ExperimentConfig::default_for(env).map_err(err)?;
    serde_json::to_string_pretty(&config).map_err(err)
}

/// Full lifelong run from a config JSON string and a demo file; returns the
/// report as a JSON string. This is the heavy entry point.
#[pyfunction]
fn run_lifelong(config_json: &str, demo_path: &str, out_dir: &str) -> PyResult<String> {
    let config: ExperimentConfig = serde_json::from_str(config_json).map_err(err)?;
    let report = flair_core::runner::cmd_run_lifelong(
        &config,
        std::path::Path::new(demo_path),
        std::path::Path::new(out_dir),
        false,
    )
    .map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[pymodule]
fn flair_forge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMlp>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(knn_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_kl, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_kl, m)?)?;
    m.add_function(wrap_pyfunction!(sample_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_action, m)?)?;
    m.add_function(wrap_pyfunction!(gen_demos, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_lifelong, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
