//! Payoff-based learning with Gaussian mixed strategies.
//!
//! Agent `i` plays `a_i ∼ N(μ_i, σ²)` and sees only its payoff `U_i(a)`. The
//! score-function estimate `U_i(a)(a_i − μ_i)/σ²` is unbiased for
//! `∂φ̃/∂μ_i = E[∂U_i/∂x_i]` under the policy; subtracting the baseline
//! `U_i(μ)` gives the two-point variant, whose variance does not grow with
//! `‖μ‖`. Means move by `μ(t+1) = μ(t) + γ(t+1) σ³(t+1) · estimate(t)`.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::comm::fmt_f64;
use crate::error::{Error, Result};
use crate::game::{JointAction, PotentialGame};
use crate::rng::{stream, TAG_ORACLE, TAG_RUN};
use crate::schedules::{validate_payoff_schedules, ScheduleSpec, Target};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    mu: Vec<f64>,
    sigma: f64,
}

impl GaussianPolicy {
    pub fn new(mu: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Precondition(format!("sigma must be > 0, got {sigma}")));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy mean"));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.mu
            .iter()
            .map(|m| {
                let z: f64 = rng.sample(StandardNormal);
                m + self.sigma * z
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    OnePoint,
    TwoPoint,
}

impl EstimatorMode {
    pub fn target(self) -> Target {
        match self {
            EstimatorMode::OnePoint => Target::OnePoint,
            EstimatorMode::TwoPoint => Target::TwoPoint,
        }
    }
}

fn check_pair(game: &dyn PotentialGame, a: &[f64], policy: &GaussianPolicy) -> Result<()> {
    let n = game.n_agents();
    for len in [a.len(), policy.mu.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    Ok(())
}

fn estimate_unchecked(
    game: &dyn PotentialGame,
    a: &[f64],
    policy: &GaussianPolicy,
    mode: EstimatorMode,
) -> Vec<f64> {
    let s2 = policy.sigma * policy.sigma;
    (0..game.n_agents())
        .map(|i| {
            let mut u = game.utility(i, a);
            if mode == EstimatorMode::TwoPoint {
                u -= game.utility(i, &policy.mu);
            }
            u * (a[i] - policy.mu[i]) / s2
        })
        .collect()
}

/// `U_i(a)(a_i − μ_i)/σ²` for every agent.
pub fn one_point_estimate(game: &dyn PotentialGame, a: &JointAction, policy: &GaussianPolicy) -> Result<Vec<f64>> {
    check_pair(game, a.as_slice(), policy)?;
    Ok(estimate_unchecked(game, a.as_slice(), policy, EstimatorMode::OnePoint))
}

/// `(U_i(a) − U_i(μ))(a_i − μ_i)/σ²` for every agent.
pub fn two_point_estimate(game: &dyn PotentialGame, a: &JointAction, policy: &GaussianPolicy) -> Result<Vec<f64>> {
    check_pair(game, a.as_slice(), policy)?;
    Ok(estimate_unchecked(game, a.as_slice(), policy, EstimatorMode::TwoPoint))
}

pub fn estimate(
    game: &dyn PotentialGame,
    a: &JointAction,
    policy: &GaussianPolicy,
    mode: EstimatorMode,
) -> Result<Vec<f64>> {
    check_pair(game, a.as_slice(), policy)?;
    Ok(estimate_unchecked(game, a.as_slice(), policy, mode))
}

/// Per-coordinate sample mean, variance and standard error of the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n_samples: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub stderr: Vec<f64>,
}

fn moments(n: usize, n_samples: usize, mut draw: impl FnMut(&mut Vec<f64>)) -> Moments {
    // Welford, one accumulator per coordinate
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut buf = Vec::with_capacity(n);
    for k in 1..=n_samples {
        buf.clear();
        draw(&mut buf);
        for i in 0..n {
            let d = buf[i] - mean[i];
            mean[i] += d / k as f64;
            m2[i] += d * (buf[i] - mean[i]);
        }
    }
    let variance: Vec<f64> = m2.iter().map(|m| m / (n_samples as f64 - 1.0)).collect();
    let stderr = variance.iter().map(|v| (v / n_samples as f64).sqrt()).collect();
    Moments {
        n_samples,
        mean,
        variance,
        stderr,
    }
}

/// Minimum sample count accepted by the Monte-Carlo routines.
pub const MIN_MC_SAMPLES: usize = 1000;

fn check_samples(game: &dyn PotentialGame, policy: &GaussianPolicy, n_samples: usize) -> Result<()> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {n_samples}"
        )));
    }
    if policy.mu.len() != game.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: game.n_agents(),
            got: policy.mu.len(),
        });
    }
    Ok(())
}

/// Monte-Carlo estimate of the smoothed gradient `E[∂U_i/∂x_i(x)]`,
/// `x ∼ N(μ, σ²I)`, with standard errors. Uses its own oracle stream.
pub fn mc_mixed_gradient(
    game: &dyn PotentialGame,
    policy: &GaussianPolicy,
    n_samples: usize,
    seed: u64,
) -> Result<Moments> {
    check_samples(game, policy, n_samples)?;
    let mut rng = stream(seed, TAG_ORACLE);
    let n = game.n_agents();
    Ok(moments(n, n_samples, |out| {
        let x = policy.sample(&mut rng);
        out.extend((0..n).map(|i| game.utility_partial(i, &x)));
    }))
}

/// Sample moments of an estimator over `n_samples` independent actions.
pub fn estimator_moments(
    game: &dyn PotentialGame,
    policy: &GaussianPolicy,
    mode: EstimatorMode,
    n_samples: usize,
    seed: u64,
) -> Result<Moments> {
    check_samples(game, policy, n_samples)?;
    let mut rng = stream(seed, TAG_RUN);
    Ok(moments(game.n_agents(), n_samples, |out| {
        let a = policy.sample(&mut rng);
        out.extend(estimate_unchecked(game, &a, policy, mode));
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffConfig {
    pub gamma: ScheduleSpec,
    pub sigma: ScheduleSpec,
    pub mode: EstimatorMode,
    pub mu0: Vec<f64>,
    pub horizon: usize,
    pub seed: u64,
    pub log_stride: usize,
    pub validate: bool,
}

impl PayoffConfig {
    pub fn new(
        gamma: ScheduleSpec,
        sigma: ScheduleSpec,
        mode: EstimatorMode,
        mu0: Vec<f64>,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            gamma,
            sigma,
            mode,
            mu0,
            horizon,
            seed,
            log_stride: 10,
            validate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffState {
    pub mu: Vec<f64>,
    /// The action `a(t) ∼ N(μ(t), σ²(t))` played this round.
    pub action: Vec<f64>,
    pub t: usize,
}

/// One update. `sigma_now` is the σ that generated `state.action`;
/// `gamma_next`, `sigma_next` are `γ(t+1)`, `σ(t+1)`.
///
/// Returns the new state (with `a(t+1)` already drawn) and the estimate
/// that drove the update. The new mean may be non-finite if the dynamics
/// blew up; callers decide what to do with that.
#[allow(clippy::too_many_arguments)]
pub fn payoff_step(
    game: &dyn PotentialGame,
    state: &PayoffState,
    mode: EstimatorMode,
    sigma_now: f64,
    gamma_next: f64,
    sigma_next: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(PayoffState, Vec<f64>)> {
    let policy = GaussianPolicy::new(state.mu.clone(), sigma_now)?;
    check_pair(game, &state.action, &policy)?;
    let est = estimate_unchecked(game, &state.action, &policy, mode);
    let step = gamma_next * sigma_next.powi(3);
    let mu: Vec<f64> = state.mu.iter().zip(&est).map(|(m, e)| m + step * e).collect();
    let action = mu
        .iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            m + sigma_next * z
        })
        .collect();
    Ok((
        PayoffState {
            mu,
            action,
            t: state.t + 1,
        },
        est,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffRow {
    pub t: usize,
    pub phi_mu: f64,
    pub phi_a: f64,
    pub grad_norm_mu: f64,
    pub sigma_t: f64,
    pub gamma_t: f64,
    pub mu: Vec<f64>,
    pub action: Vec<f64>,
    /// Raw estimator values computed from this row's action.
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTrace {
    pub n_agents: usize,
    pub horizon: usize,
    pub rows: Vec<PayoffRow>,
    /// Set when the mean left the finite range; the trace stops there.
    pub diverged_at: Option<usize>,
    pub final_state: PayoffState,
}

impl PayoffTrace {
    pub fn last(&self) -> &PayoffRow {
        self.rows.last().expect("trace always has the initial row")
    }

    pub fn header(&self, with_means: bool) -> Vec<String> {
        let mut h: Vec<String> = ["t", "phi_mu", "phi_a", "grad_norm_mu", "sigma_t", "gamma_t"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if with_means {
            h.extend((1..=self.n_agents).map(|i| format!("mu_{i}")));
        }
        h
    }

    pub fn write_csv(&self, w: impl Write, with_means: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header(with_means))?;
        for r in &self.rows {
            let mut rec = vec![
                r.t.to_string(),
                fmt_f64(r.phi_mu),
                fmt_f64(r.phi_a),
                fmt_f64(r.grad_norm_mu),
                fmt_f64(r.sigma_t),
                fmt_f64(r.gamma_t),
            ];
            if with_means {
                rec.extend(r.mu.iter().map(|v| fmt_f64(*v)));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn payoff_row(game: &dyn PotentialGame, state: &PayoffState, config: &PayoffConfig) -> Result<PayoffRow> {
    let idx = state.t as u64 + 1;
    let sigma_t = config.sigma.value(idx);
    let policy = GaussianPolicy::new(state.mu.clone(), sigma_t)?;
    Ok(PayoffRow {
        t: state.t,
        phi_mu: game.potential(&state.mu),
        phi_a: game.potential(&state.action),
        grad_norm_mu: game.potential_gradient(&state.mu).iter().map(|g| g * g).sum::<f64>().sqrt(),
        sigma_t,
        gamma_t: config.gamma.value(idx),
        mu: state.mu.clone(),
        action: state.action.clone(),
        estimate: estimate_unchecked(game, &state.action, &policy, config.mode),
    })
}

/// Runs the payoff-based learner. Round `t` (from 0) plays with
/// `σ = sigma.value(t+1)` and moves the mean with `gamma.value(t+2)` and
/// `sigma.value(t+2)`, so the schedules are never evaluated at zero.
pub fn run_payoff(game: &dyn PotentialGame, config: &PayoffConfig) -> Result<PayoffTrace> {
    let n = game.n_agents();
    config.gamma.check()?;
    config.sigma.check()?;
    if config.log_stride == 0 {
        return Err(Error::Config("log_stride must be >= 1".into()));
    }
    if config.mu0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: config.mu0.len(),
        });
    }
    if config.validate {
        let report = validate_payoff_schedules(&config.gamma, &config.sigma, config.mode.target());
        if !report.admissible() {
            return Err(Error::Inadmissible(report.to_string()));
        }
    }
    let mut rng = stream(config.seed, TAG_RUN);
    let initial = GaussianPolicy::new(config.mu0.clone(), config.sigma.value(1))?;
    let mut state = PayoffState {
        action: initial.sample(&mut rng),
        mu: config.mu0.clone(),
        t: 0,
    };
    let mut rows = vec![payoff_row(game, &state, config)?];
    let mut diverged_at = None;
    for t in 0..config.horizon as u64 {
        let (next, _) = payoff_step(
            game,
            &state,
            config.mode,
            config.sigma.value(t + 1),
            config.gamma.value(t + 2),
            config.sigma.value(t + 2),
            &mut rng,
        )?;
        if next.mu.iter().chain(&next.action).any(|v| !v.is_finite()) {
            diverged_at = Some(next.t);
            break;
        }
        state = next;
        if state.t.is_multiple_of(config.log_stride) || state.t == config.horizon {
            rows.push(payoff_row(game, &state, config)?);
        }
    }
    Ok(PayoffTrace {
        n_agents: n,
        horizon: config.horizon,
        rows,
        diverged_at,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{FlowControlGame, QuadraticGame};

    /// `U(x) = x`, one agent.
    struct Linear;

    impl PotentialGame for Linear {
        fn n_agents(&self) -> usize {
            1
        }
        fn potential(&self, a: &[f64]) -> f64 {
            a[0]
        }
        fn utility(&self, _: usize, a: &[f64]) -> f64 {
            a[0]
        }
        fn utility_partial(&self, _: usize, _: &[f64]) -> f64 {
            1.0
        }
        fn potential_partial(&self, _: usize, _: &[f64]) -> f64 {
            1.0
        }
    }

    #[test]
    fn linear_game_values() {
        let p = GaussianPolicy::new(vec![0.0], 1.0).unwrap();
        let a = JointAction::new(vec![2.0]).unwrap();
        assert_eq!(one_point_estimate(&Linear, &a, &p).unwrap(), vec![4.0]);
        assert_eq!(two_point_estimate(&Linear, &a, &p).unwrap(), vec![4.0]);
    }

    #[test]
    fn estimate_at_mean_is_zero() {
        let game = FlowControlGame::new(vec![0.3, 0.8, 1.0]).unwrap();
        let mu = vec![1.0, -0.5, 2.0];
        let p = GaussianPolicy::new(mu.clone(), 0.7).unwrap();
        let a = JointAction::new(mu).unwrap();
        assert_eq!(one_point_estimate(&game, &a, &p).unwrap(), vec![0.0; 3]);
        assert_eq!(two_point_estimate(&game, &a, &p).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn two_point_linear_is_chi_square() {
        // (a − μ)²/σ² with a ∼ N(μ, σ²): mean 1, variance 2, for any μ, σ
        for (mu, sigma) in [(0.0, 1.0), (5.0, 0.3), (-40.0, 2.0)] {
            let p = GaussianPolicy::new(vec![mu], sigma).unwrap();
            let m = estimator_moments(&Linear, &p, EstimatorMode::TwoPoint, 200_000, 9).unwrap();
            assert!((m.mean[0] - 1.0).abs() < 4.0 * m.stderr[0]);
            assert!((m.variance[0] - 2.0).abs() < 0.05, "{}", m.variance[0]);
        }
    }

    #[test]
    fn quadratic_smoothed_gradient_is_exact() {
        let game = QuadraticGame::new(vec![0.0, 0.0]).unwrap();
        let p = GaussianPolicy::new(vec![1.5, -0.5], 0.8).unwrap();
        let m = mc_mixed_gradient(&game, &p, 100_000, 2).unwrap();
        for i in 0..2 {
            assert!((m.mean[i] + 2.0 * p.mu()[i]).abs() < 4.0 * m.stderr[i]);
        }
    }

    #[test]
    fn stderr_scales_with_root_n() {
        let game = FlowControlGame::new(vec![1.0, 1.0]).unwrap();
        let p = GaussianPolicy::new(vec![0.0, 0.0], 0.5).unwrap();
        let a = mc_mixed_gradient(&game, &p, 20_000, 1).unwrap();
        let b = mc_mixed_gradient(&game, &p, 40_000, 1).unwrap();
        for i in 0..2 {
            let ratio = b.stderr[i] / a.stderr[i];
            assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2);
        }
        assert!(mc_mixed_gradient(&game, &p, 999, 1).is_err());
    }

    #[test]
    fn policy_sampling_moments() {
        let p = GaussianPolicy::new(vec![3.0, -1.0], 0.25).unwrap();
        let mut rng = stream(4, TAG_RUN);
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| p.sample(&mut rng)).collect();
        for i in 0..2 {
            let mean = draws.iter().map(|d| d[i]).sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = 0.25 / (n as f64).sqrt();
            let se_var = 0.0625 * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!((mean - p.mu()[i]).abs() < 4.0 * se_mean);
            assert!((var - 0.0625).abs() < 4.0 * se_var);
        }
        assert!(GaussianPolicy::new(vec![0.0], 0.0).is_err());
        assert!(GaussianPolicy::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn zero_step_keeps_mean() {
        let game = FlowControlGame::new(vec![1.0, 0.5]).unwrap();
        let mut rng = stream(1, TAG_RUN);
        let mut state = PayoffState {
            mu: vec![1.0, 2.0],
            action: vec![1.3, 1.7],
            t: 0,
        };
        for t in 1..50u64 {
            let s = (t as f64).powf(-0.13);
            let (next, _) =
                payoff_step(&game, &state, EstimatorMode::OnePoint, s, 0.0, (t as f64 + 1.0).powf(-0.13), &mut rng)
                    .unwrap();
            assert_eq!(next.mu, vec![1.0, 2.0]);
            state = next;
        }
    }

    #[test]
    fn step_matches_update_rule() {
        let game = FlowControlGame::new(vec![0.4, 0.9]).unwrap();
        let state = PayoffState {
            mu: vec![0.5, -1.0],
            action: vec![0.9, -1.4],
            t: 3,
        };
        let mut rng = stream(1, TAG_RUN);
        let (next, est) = payoff_step(&game, &state, EstimatorMode::TwoPoint, 0.8, 0.3, 0.7, &mut rng).unwrap();
        let p = GaussianPolicy::new(state.mu.clone(), 0.8).unwrap();
        let expected = two_point_estimate(&game, &JointAction::new(state.action.clone()).unwrap(), &p).unwrap();
        assert_eq!(est, expected);
        for i in 0..2 {
            assert_eq!(next.mu[i], state.mu[i] + 0.3 * 0.7f64.powi(3) * expected[i]);
        }
        assert_eq!(next.t, 4);
    }

    #[test]
    fn run_validation_and_horizon_zero() {
        let game = FlowControlGame::new(vec![1.0, 1.0]).unwrap();
        let g = ScheduleSpec::new(1.0, 0.6).unwrap();
        let s = ScheduleSpec::new(1.0, 0.13).unwrap();
        let cfg = PayoffConfig::new(g, s, EstimatorMode::TwoPoint, vec![1.0, 2.0], 0, 3);
        let trace = run_payoff(&game, &cfg).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.final_state.mu, vec![1.0, 2.0]);

        let mut bad = cfg.clone();
        bad.sigma = ScheduleSpec::new(1.0, 0.10).unwrap();
        assert!(matches!(run_payoff(&game, &bad), Err(Error::Inadmissible(_))));
        bad.validate = false;
        bad.horizon = 20;
        assert!(run_payoff(&game, &bad).is_ok());
    }

    #[test]
    fn runaway_run_is_marked_diverged() {
        // payoffs so steep that the second update overflows
        struct Cliff;
        impl PotentialGame for Cliff {
            fn n_agents(&self) -> usize {
                1
            }
            fn potential(&self, a: &[f64]) -> f64 {
                1e300 * a[0]
            }
            fn utility(&self, _: usize, a: &[f64]) -> f64 {
                1e300 * a[0]
            }
            fn utility_partial(&self, _: usize, _: &[f64]) -> f64 {
                1e300
            }
            fn potential_partial(&self, _: usize, _: &[f64]) -> f64 {
                1e300
            }
        }
        let g = ScheduleSpec::new(1.0, 0.6).unwrap();
        let s = ScheduleSpec::new(1.0, 0.13).unwrap();
        let cfg = PayoffConfig::new(g, s, EstimatorMode::OnePoint, vec![5.0], 500, 1);
        let trace = run_payoff(&Cliff, &cfg).unwrap();
        assert!(trace.diverged_at.is_some());
        assert!(trace.final_state.mu[0].is_finite());
    }
}
