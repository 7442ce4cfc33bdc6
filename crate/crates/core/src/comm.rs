//! Communication-based learning.
//!
//! Agent `i` keeps a push-sum copy `x_i ∈ ℝ^N` of the whole joint action.
//! After mixing it evaluates its own partial derivative at its estimate and
//! pushes a noisy gradient step into coordinate `i` only:
//!
//! ```text
//! x_i(t+1) = w_i(t+1) + γ(t+1) [f_i(â_i(t+1)) + ξ_i(t)],   a_i(t+1) = â_i^i(t+1)
//! ```
//!
//! where `f_i` is `∂U_i/∂a_i` placed in coordinate `i`. The network average
//! then moves like `x̄(t+1) = x̄(t) + γ(t+1)[∇φ(x̄(t))/N + R(t, x̄(t))] + γ ξ̄`
//! with the residual `R = (F(â) − ∇φ(x̄))/N`.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PotentialGame;
use crate::graph::{verify_s_strong_connectivity, Digraph, GraphSchedule};
use crate::push_sum::{l1_norm, l2_distance, PushSumState};
use crate::rng::{stream, TAG_RUN};
use crate::schedules::{validate_comm_schedule, ScheduleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Uniform on `[−scale, scale]`.
    Uniform,
    /// `N(0, (scale/2)²)` conditioned on `|ξ| ≤ scale`.
    TruncatedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Uniform,
            scale: 0.1,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::Uniform,
            scale: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!(
                "noise scale must be >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// One coordinate. A zero scale draws nothing from `rng`.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::Uniform => rng.random_range(-self.scale..=self.scale),
            NoiseKind::TruncatedGaussian => {
                let normal = Normal::new(0.0, 0.5 * self.scale).expect("positive std");
                loop {
                    let v: f64 = normal.sample(rng);
                    if v.abs() <= self.scale {
                        return v;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommConfig {
    pub gamma: ScheduleSpec,
    pub noise: NoiseSpec,
    /// `x_i(0)` for every agent, each of length `N`.
    pub initial_x: Vec<Vec<f64>>,
    pub horizon: usize,
    pub seed: u64,
    pub log_stride: usize,
    /// Reject inadmissible step sizes and graph schedules before running.
    pub validate: bool,
}

impl CommConfig {
    pub fn new(gamma: ScheduleSpec, initial_x: Vec<Vec<f64>>, horizon: usize, seed: u64) -> Self {
        Self {
            gamma,
            noise: NoiseSpec::default(),
            initial_x,
            horizon,
            seed,
            log_stride: 10,
            validate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommState {
    pub push_sum: PushSumState,
    /// `a_i(t) = â_i^i(t)`.
    pub actions: Vec<f64>,
    pub t: usize,
}

impl CommState {
    pub fn new(initial_x: Vec<Vec<f64>>) -> Result<Self> {
        let n = initial_x.len();
        let push_sum = PushSumState::new(initial_x)?;
        if push_sum.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: push_sum.dim(),
            });
        }
        let actions = own_coordinates(&push_sum.estimate);
        Ok(Self {
            push_sum,
            actions,
            t: 0,
        })
    }

    pub fn average(&self) -> Vec<f64> {
        self.push_sum.average()
    }
}

fn own_coordinates(estimates: &[Vec<f64>]) -> Vec<f64> {
    estimates.iter().enumerate().map(|(i, e)| e[i]).collect()
}

/// One round of the learner with step size `gamma = γ(t+1)`.
///
/// Returns the new state and the perturbations `e_i` that were injected.
pub fn comm_step(
    game: &dyn PotentialGame,
    state: &CommState,
    graph: &Digraph,
    gamma: f64,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(CommState, Vec<Vec<f64>>)> {
    let n = game.n_agents();
    if state.push_sum.n_agents() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.push_sum.n_agents(),
        });
    }
    let mixed = state.push_sum.mix(graph)?;
    let mut perturbations = vec![vec![0.0; n]; n];
    for (i, e) in perturbations.iter_mut().enumerate() {
        let g = game.utility_partial(i, &mixed.estimate[i]);
        e[i] = gamma * (g + noise.sample(rng));
    }
    let actions = own_coordinates(&mixed.estimate);
    let push_sum = PushSumState::finish(mixed, &perturbations)?;
    if push_sum.x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("push-sum state"));
    }
    Ok((
        CommState {
            push_sum,
            actions,
            t: state.t + 1,
        },
        perturbations,
    ))
}

/// `‖R‖ = (1/N) ‖F(â) − ∇φ(x̄)‖` where `F_i(â) = ∂U_i/∂a_i(â_i)`.
pub fn residual_norm(game: &dyn PotentialGame, estimates: &[Vec<f64>], xbar: &[f64]) -> Result<f64> {
    let n = game.n_agents();
    if estimates.len() != n || xbar.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if estimates.len() != n { estimates.len() } else { xbar.len() },
        });
    }
    let mut sq = 0.0;
    for (i, e) in estimates.iter().enumerate() {
        if e.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: e.len(),
            });
        }
        let d = game.utility_partial(i, e) - game.potential_partial(i, xbar);
        sq += d * d;
    }
    Ok(sq.sqrt() / n as f64)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommRow {
    pub t: usize,
    pub phi: f64,
    pub grad_norm_xbar: f64,
    /// `max_i ‖â_i(t) − x̄(t−1)‖`.
    pub consensus_err_max: f64,
    /// `Σ_i ‖â_i(t) − x̄(t−1)‖`.
    pub consensus_err_sum: f64,
    /// `‖R(t−1, x̄(t−1))‖`.
    pub residual_norm: f64,
    pub actions: Vec<f64>,
    pub xbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommTrace {
    pub n_agents: usize,
    pub horizon: usize,
    pub rows: Vec<CommRow>,
    /// `Σ_j ‖e_j(s)‖₁` for every round `s = 1..=horizon`.
    pub perturbation_l1: Vec<f64>,
    /// `Σ_j ‖x_j(0)‖₁`.
    pub x0_l1: f64,
    pub final_state: CommState,
}

impl CommTrace {
    pub fn last(&self) -> &CommRow {
        self.rows.last().expect("trace always has the initial row")
    }

    pub fn header(&self, with_actions: bool) -> Vec<String> {
        let mut h: Vec<String> = ["t", "phi", "grad_norm_xbar", "consensus_err_max", "residual_norm"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if with_actions {
            h.extend((1..=self.n_agents).map(|i| format!("a_{i}")));
        }
        h
    }

    pub fn write_csv(&self, w: impl Write, with_actions: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header(with_actions))?;
        for r in &self.rows {
            let mut rec = vec![
                r.t.to_string(),
                fmt_f64(r.phi),
                fmt_f64(r.grad_norm_xbar),
                fmt_f64(r.consensus_err_max),
                fmt_f64(r.residual_norm),
            ];
            if with_actions {
                rec.extend(r.actions.iter().map(|v| fmt_f64(*v)));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(
    game: &dyn PotentialGame,
    state: &CommState,
    xbar_prev: &[f64],
) -> Result<CommRow> {
    let xbar = state.average();
    let dists: Vec<f64> = state
        .push_sum
        .estimate
        .iter()
        .map(|e| l2_distance(e, xbar_prev))
        .collect();
    Ok(CommRow {
        t: state.t,
        phi: game.potential(&state.actions),
        grad_norm_xbar: norm(&game.potential_gradient(&xbar)),
        consensus_err_max: dists.iter().cloned().fold(0.0, f64::max),
        consensus_err_sum: dists.iter().sum(),
        residual_norm: residual_norm(game, &state.push_sum.estimate, xbar_prev)?,
        actions: state.actions.clone(),
        xbar,
    })
}

/// Runs `horizon` rounds. Rows are logged at `t = 0`, every `log_stride`
/// rounds, and at the horizon.
pub fn run_comm(
    game: &dyn PotentialGame,
    schedule: &dyn GraphSchedule,
    config: &CommConfig,
) -> Result<CommTrace> {
    let n = game.n_agents();
    config.gamma.check()?;
    config.noise.check()?;
    if config.log_stride == 0 {
        return Err(Error::Config("log_stride must be >= 1".into()));
    }
    if config.initial_x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: config.initial_x.len(),
        });
    }
    if schedule.n_nodes() != n {
        return Err(Error::NodeCountMismatch {
            expected: n,
            got: schedule.n_nodes(),
        });
    }
    if config.validate {
        let report = validate_comm_schedule(&config.gamma);
        if !report.admissible() {
            return Err(Error::Inadmissible(report.to_string()));
        }
        let conn = verify_s_strong_connectivity(schedule, config.horizon.max(schedule.window()))?;
        if let Some(w) = conn.first_violation {
            return Err(Error::Inadmissible(format!(
                "graph schedule is not {}-strongly connected: window starting at {w}",
                schedule.window()
            )));
        }
    }

    let mut rng = stream(config.seed, TAG_RUN);
    let mut state = CommState::new(config.initial_x.clone())?;
    let x0_l1 = state.push_sum.x.iter().map(|x| l1_norm(x)).sum();
    let mut rows = vec![row(game, &state, &state.average())?];
    let mut perturbation_l1 = Vec::with_capacity(config.horizon);
    for t in 0..config.horizon {
        let xbar_prev = state.average();
        let gamma = config.gamma.value(t as u64 + 1);
        let (next, e) = comm_step(game, &state, &schedule.graph(t), gamma, &config.noise, &mut rng)?;
        perturbation_l1.push(e.iter().map(|v| l1_norm(v)).sum());
        state = next;
        if state.t.is_multiple_of(config.log_stride) || state.t == config.horizon {
            rows.push(row(game, &state, &xbar_prev)?);
        }
    }
    Ok(CommTrace {
        n_agents: n,
        horizon: config.horizon,
        rows,
        perturbation_l1,
        x0_l1,
        final_state: state,
    })
}

/// `x_i(0) = c` for every agent.
pub fn replicate_initial(c: &[f64]) -> Vec<Vec<f64>> {
    vec![c.to_vec(); c.len()]
}
