//! Python bindings: games, estimators, both learners, graph schedules and
//! experiment orchestration.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use potential_play::comm::{replicate_initial, run_comm as run_comm_core, CommConfig, NoiseKind, NoiseSpec};
use potential_play::experiment::{
    load_config, parse_config_unchecked, run_experiment as run_experiment_core, summarize as summarize_core,
};
use potential_play::game::{check_potential_identity, PotentialGame};
use potential_play::graph::{verify_graph_sequence, Digraph, GraphSchedule, RandomSConnected};
use potential_play::payoff::{
    estimate as estimate_core, estimator_moments as estimator_moments_core, mc_mixed_gradient as mc_core,
    run_payoff as run_payoff_core, EstimatorMode, GaussianPolicy, Moments, PayoffConfig,
};
use potential_play::rng::{stream, TAG_REWARDS};
use potential_play::schedules::{validate_comm_schedule, validate_payoff_schedules, ScheduleSpec, Target};
use potential_play::{Error, JointAction};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn mode_of(name: &str) -> PyResult<EstimatorMode> {
    match name {
        "one-point" => Ok(EstimatorMode::OnePoint),
        "two-point" => Ok(EstimatorMode::TwoPoint),
        other => Err(PyValueError::new_err(format!("unknown estimator {other:?}"))),
    }
}

fn spec(pair: (f64, f64)) -> PyResult<ScheduleSpec> {
    ScheduleSpec::new(pair.0, pair.1).map_err(err)
}

/// Flow-control game with reward factors `h`.
#[pyclass(frozen)]
struct FlowControlGame(potential_play::FlowControlGame);

#[pymethods]
impl FlowControlGame {
    #[new]
    fn new(h: Vec<f64>) -> PyResult<Self> {
        potential_play::FlowControlGame::new(h).map(Self).map_err(err)
    }

    /// Rewards drawn uniformly in (0, 1] from the rewards stream of `seed`.
    #[staticmethod]
    fn random(n: usize, seed: u64) -> PyResult<Self> {
        potential_play::FlowControlGame::random(n, &mut stream(seed, TAG_REWARDS))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.0.n_agents()
    }

    #[getter]
    fn rewards(&self) -> Vec<f64> {
        self.0.rewards().to_vec()
    }

    fn potential(&self, a: Vec<f64>) -> PyResult<f64> {
        self.check(&a)?;
        Ok(self.0.potential(&a))
    }

    fn utility(&self, i: usize, a: Vec<f64>) -> PyResult<f64> {
        self.check_agent(i, &a)?;
        Ok(self.0.utility(i, &a))
    }

    fn utility_partial(&self, i: usize, a: Vec<f64>) -> PyResult<f64> {
        self.check_agent(i, &a)?;
        Ok(self.0.utility_partial(i, &a))
    }

    fn gradient(&self, a: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&a)?;
        Ok(self.0.potential_gradient(&a))
    }

    /// Largest analytic and finite-difference discrepancies of the potential
    /// identity over sampled deviations.
    #[pyo3(signature = (samples=1000, radius=10.0, seed=0))]
    fn check_identity(&self, samples: usize, radius: f64, seed: u64) -> PyResult<(f64, f64)> {
        let r = check_potential_identity(&self.0, samples, radius, seed).map_err(err)?;
        Ok((r.max_analytic_discrepancy, r.max_fd_discrepancy))
    }

    fn __repr__(&self) -> String {
        format!("FlowControlGame(h={:?})", self.0.rewards())
    }
}

impl FlowControlGame {
    fn check(&self, a: &[f64]) -> PyResult<()> {
        JointAction::new(a.to_vec()).map_err(err)?;
        if a.len() != self.0.n_agents() {
            return Err(err(Error::DimensionMismatch {
                expected: self.0.n_agents(),
                got: a.len(),
            }));
        }
        Ok(())
    }

    fn check_agent(&self, i: usize, a: &[f64]) -> PyResult<()> {
        self.check(a)?;
        if i >= self.0.n_agents() {
            return Err(err(Error::AgentOutOfRange {
                index: i,
                n: self.0.n_agents(),
            }));
        }
        Ok(())
    }
}

/// Admissibility of power-law exponents. `mode` is `comm`, `one-point` or
/// `two-point`; returns `(admissible, report)`.
#[pyfunction]
#[pyo3(signature = (p, q=0.0, mode="one-point"))]
fn validate_schedule(p: f64, q: f64, mode: &str) -> PyResult<(bool, String)> {
    let gamma = spec((1.0, p))?;
    let report = match mode {
        "comm" => validate_comm_schedule(&gamma),
        _ => {
            let target = match mode_of(mode)? {
                EstimatorMode::OnePoint => Target::OnePoint,
                EstimatorMode::TwoPoint => Target::TwoPoint,
            };
            validate_payoff_schedules(&gamma, &spec((1.0, q))?, target)
        }
    };
    Ok((report.admissible(), report.to_string()))
}

/// One draw of the payoff-based gradient estimator at action `a`.
#[pyfunction]
#[pyo3(signature = (game, a, mu, sigma, mode="two-point"))]
fn estimate(game: &FlowControlGame, a: Vec<f64>, mu: Vec<f64>, sigma: f64, mode: &str) -> PyResult<Vec<f64>> {
    let policy = GaussianPolicy::new(mu, sigma).map_err(err)?;
    let a = JointAction::new(a).map_err(err)?;
    estimate_core(&game.0, &a, &policy, mode_of(mode)?).map_err(err)
}

fn moments_dict<'py>(py: Python<'py>, m: &Moments) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n_samples", m.n_samples)?;
    d.set_item("mean", m.mean.clone())?;
    d.set_item("variance", m.variance.clone())?;
    d.set_item("stderr", m.stderr.clone())?;
    Ok(d)
}

/// Sample mean, variance and standard error of the estimator under
/// `N(mu, sigma^2 I)`.
#[pyfunction]
#[pyo3(signature = (game, mu, sigma, mode="two-point", n_samples=100_000, seed=0))]
fn estimator_moments<'py>(
    py: Python<'py>,
    game: &FlowControlGame,
    mu: Vec<f64>,
    sigma: f64,
    mode: &str,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = GaussianPolicy::new(mu, sigma).map_err(err)?;
    let m = py
        .detach(|| estimator_moments_core(&game.0, &policy, mode_of(mode)?, n_samples, seed).map_err(err))?;
    moments_dict(py, &m)
}

/// Monte-Carlo estimate of the smoothed utility gradient.
#[pyfunction]
#[pyo3(signature = (game, mu, sigma, n_samples=100_000, seed=0))]
fn mc_mixed_gradient<'py>(
    py: Python<'py>,
    game: &FlowControlGame,
    mu: Vec<f64>,
    sigma: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = GaussianPolicy::new(mu, sigma).map_err(err)?;
    let m = py.detach(|| mc_core(&game.0, &policy, n_samples, seed).map_err(err))?;
    moments_dict(py, &m)
}

/// Communication-based learner on a random S-strongly connected schedule.
/// Returns a dict of logged columns plus the final actions.
#[pyfunction]
#[pyo3(signature = (
    game, horizon, seed=0, gamma=(40.0, 0.9), initial=None, window=4, density=0.1,
    noise="uniform", noise_scale=0.1, log_stride=10, validate=true
))]
#[allow(clippy::too_many_arguments)]
fn run_comm<'py>(
    py: Python<'py>,
    game: &FlowControlGame,
    horizon: usize,
    seed: u64,
    gamma: (f64, f64),
    initial: Option<Vec<f64>>,
    window: usize,
    density: f64,
    noise: &str,
    noise_scale: f64,
    log_stride: usize,
    validate: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let n = game.0.n_agents();
    let kind = match noise {
        "uniform" => NoiseKind::Uniform,
        "truncated-gaussian" => NoiseKind::TruncatedGaussian,
        other => return Err(PyValueError::new_err(format!("unknown noise {other:?}"))),
    };
    let sched = RandomSConnected::new(n, window, density, seed).map_err(err)?;
    let mut cfg = CommConfig::new(
        spec(gamma)?,
        replicate_initial(&initial.unwrap_or_else(|| vec![0.0; n])),
        horizon,
        seed,
    );
    cfg.noise = NoiseSpec { kind, scale: noise_scale };
    cfg.log_stride = log_stride;
    cfg.validate = validate;
    let trace = py.detach(|| run_comm_core(&game.0, &sched, &cfg).map_err(err))?;
    let d = PyDict::new(py);
    d.set_item("t", trace.rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("phi", trace.rows.iter().map(|r| r.phi).collect::<Vec<_>>())?;
    d.set_item("grad_norm_xbar", trace.rows.iter().map(|r| r.grad_norm_xbar).collect::<Vec<_>>())?;
    d.set_item("consensus_err_max", trace.rows.iter().map(|r| r.consensus_err_max).collect::<Vec<_>>())?;
    d.set_item("residual_norm", trace.rows.iter().map(|r| r.residual_norm).collect::<Vec<_>>())?;
    d.set_item("actions", trace.final_state.actions.clone())?;
    d.set_item("xbar", trace.last().xbar.clone())?;
    Ok(d)
}

/// Payoff-based learner with one- or two-point estimates.
#[pyfunction]
#[pyo3(signature = (
    game, horizon, seed=0, mode="two-point", gamma=(16.0, 0.6), sigma=(0.5, 0.13), mu0=None,
    log_stride=10, validate=true
))]
#[allow(clippy::too_many_arguments)]
fn run_payoff<'py>(
    py: Python<'py>,
    game: &FlowControlGame,
    horizon: usize,
    seed: u64,
    mode: &str,
    gamma: (f64, f64),
    sigma: (f64, f64),
    mu0: Option<Vec<f64>>,
    log_stride: usize,
    validate: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let n = game.0.n_agents();
    let mut cfg = PayoffConfig::new(
        spec(gamma)?,
        spec(sigma)?,
        mode_of(mode)?,
        mu0.unwrap_or_else(|| vec![0.0; n]),
        horizon,
        seed,
    );
    cfg.log_stride = log_stride;
    cfg.validate = validate;
    let trace = py.detach(|| run_payoff_core(&game.0, &cfg).map_err(err))?;
    let d = PyDict::new(py);
    d.set_item("t", trace.rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("phi_mu", trace.rows.iter().map(|r| r.phi_mu).collect::<Vec<_>>())?;
    d.set_item("grad_norm_mu", trace.rows.iter().map(|r| r.grad_norm_mu).collect::<Vec<_>>())?;
    d.set_item("sigma", trace.rows.iter().map(|r| r.sigma_t).collect::<Vec<_>>())?;
    d.set_item("mu", trace.final_state.mu.clone())?;
    d.set_item("diverged_at", trace.diverged_at)?;
    Ok(d)
}

/// Edge lists of the first `horizon` graphs of a random schedule.
#[pyfunction]
#[pyo3(signature = (n, horizon, window=4, density=0.1, seed=0))]
fn generate_graphs(n: usize, horizon: usize, window: usize, density: f64, seed: u64) -> PyResult<Vec<Vec<(usize, usize)>>> {
    let sched = RandomSConnected::new(n, window, density, seed).map_err(err)?;
    Ok((0..horizon).map(|t| sched.graph(t).edges().collect()).collect())
}

/// First window start that is not strongly connected, or `None`.
#[pyfunction]
fn verify_graphs(n: usize, graphs: Vec<Vec<(usize, usize)>>, window: usize) -> PyResult<Option<usize>> {
    let graphs = graphs
        .into_iter()
        .map(|edges| Digraph::from_edges(n, edges))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(verify_graph_sequence(&graphs, window).map_err(err)?.first_violation)
}

/// Runs an experiment config and writes it to `out_dir`. Returns one dict
/// per seed.
#[pyfunction]
#[pyo3(signature = (config, out_dir, force=false))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: PathBuf,
    out_dir: PathBuf,
    force: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = if force {
        let mut c = parse_config_unchecked(&std::fs::read_to_string(&config)?).map_err(err)?;
        c.force = true;
        c.validate().map_err(err)?;
        c
    } else {
        load_config(&config).map_err(err)?
    };
    let runs = py.detach(|| run_experiment_core(&cfg, &out_dir).map_err(err))?;
    runs.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("seed", r.seed)?;
            d.set_item("final_phi", r.final_phi)?;
            d.set_item("final_grad_norm", r.final_grad_norm)?;
            d.set_item("plateaued", r.plateaued)?;
            d.set_item("plateau_onset", r.plateau_onset)?;
            d.set_item("diverged", r.diverged)?;
            Ok(d)
        })
        .collect()
}

/// Per-experiment aggregates below `dir`: median and quartiles of the final
/// potential, gradient norm and plateau onset.
#[pyfunction]
fn summarize<'py>(py: Python<'py>, dir: PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let groups = summarize_core(&dir).map_err(err)?;
    groups
        .iter()
        .map(|g| {
            let d = PyDict::new(py);
            d.set_item("label", &g.label)?;
            d.set_item("n_agents", g.n_agents)?;
            d.set_item("runs", g.runs)?;
            d.set_item("plateaued", g.plateaued)?;
            let q = |q: Option<potential_play::experiment::Quartiles>| q.map(|q| (q.q1, q.median, q.q3));
            d.set_item("final_phi", q(g.final_phi))?;
            d.set_item("final_grad_norm", q(g.final_grad_norm))?;
            d.set_item("onset", q(g.onset))?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "potential_play")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FlowControlGame>()?;
    m.add_function(wrap_pyfunction!(validate_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimator_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mc_mixed_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(run_comm, m)?)?;
    m.add_function(wrap_pyfunction!(run_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(generate_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(verify_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
