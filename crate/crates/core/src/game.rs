//! Continuous-action potential games.
//!
//! A game with agents `0..N`, scalar actions in ℝ, utilities `U_i` and a
//! potential `φ` such that `∂U_i/∂a_i = ∂φ/∂a_i` everywhere. The flow-control
//! benchmark is the built-in instance; [`QuadraticGame`] is a known-answer game
//! for tests. The probes at the bottom of this module check the smoothness and
//! growth assumptions the learners rely on by sampling, not by proof.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream, TAG_PROBE};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// A joint action `a = (a_1, .., a_N)` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction(Vec<f64>);

impl JointAction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint action"));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for JointAction {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A potential game over `A_i = ℝ`.
///
/// The slice-based methods are unchecked hot paths used by the learners;
/// callers at the API boundary go through [`potential_value`] and
/// [`utility_partial`], which validate dimensions and indices.
pub trait PotentialGame: Send + Sync {
    fn n_agents(&self) -> usize;

    fn potential(&self, a: &[f64]) -> f64;

    fn utility(&self, i: usize, a: &[f64]) -> f64;

    /// Analytic `∂U_i/∂a_i`.
    fn utility_partial(&self, i: usize, a: &[f64]) -> f64;

    /// Analytic `∂φ/∂a_i`.
    fn potential_partial(&self, i: usize, a: &[f64]) -> f64;

    fn potential_gradient(&self, a: &[f64]) -> Vec<f64> {
        (0..self.n_agents())
            .map(|i| self.potential_partial(i, a))
            .collect()
    }

    fn utilities(&self, a: &[f64]) -> Vec<f64> {
        (0..self.n_agents()).map(|i| self.utility(i, a)).collect()
    }
}

fn check_dim(game: &dyn PotentialGame, a: &[f64]) -> Result<()> {
    if a.len() != game.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: game.n_agents(),
            got: a.len(),
        });
    }
    Ok(())
}

fn check_agent(game: &dyn PotentialGame, i: usize) -> Result<()> {
    if i >= game.n_agents() {
        return Err(Error::AgentOutOfRange {
            index: i,
            n: game.n_agents(),
        });
    }
    Ok(())
}

pub fn potential_value(game: &dyn PotentialGame, a: &JointAction) -> Result<f64> {
    check_dim(game, a.as_slice())?;
    Ok(game.potential(a.as_slice()))
}

pub fn utility_partial(game: &dyn PotentialGame, i: usize, a: &JointAction) -> Result<f64> {
    check_agent(game, i)?;
    check_dim(game, a.as_slice())?;
    Ok(game.utility_partial(i, a.as_slice()))
}

/// Central difference `(φ(a + h e_i) − φ(a − h e_i)) / 2h`.
pub fn finite_diff_partial(game: &dyn PotentialGame, i: usize, a: &[f64], step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Precondition(format!("step must be > 0, got {step}")));
    }
    check_agent(game, i)?;
    check_dim(game, a)?;
    let mut x = a.to_vec();
    x[i] = a[i] + step;
    let up = game.potential(&x);
    x[i] = a[i] - step;
    let down = game.potential(&x);
    Ok((up - down) / (2.0 * step))
}

// Stable building blocks.

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + Σ_j exp(z_j))` without overflow.
fn log1p_sum_exp(z: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = z.clone().fold(0.0_f64, f64::max);
    let s: f64 = (-m).exp() + z.map(|v| (v - m).exp()).sum::<f64>();
    m + s.ln()
}

/// Distributed flow control: `N` users choose log-intensities `a_i`.
///
/// `φ(a) = log(1 + Σ h_i e^{a_i}) − Σ (3 log(1 + e^{a_i}) − a_i)`, and user `i`
/// receives `U_i(a) = log(1 + h_i e^{a_i} / (1 + Σ_{j≠i} h_j e^{a_j})) − c(a_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowControlGame {
    rewards: Vec<f64>,
    log_rewards: Vec<f64>,
}

impl FlowControlGame {
    pub fn new(rewards: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::Precondition("flow-control game needs N >= 1".into()));
        }
        if let Some(h) = rewards.iter().find(|h| !(**h > 0.0 && **h <= 1.0)) {
            return Err(Error::Config(format!("h_i ∈ (0,1] violated by {h}")));
        }
        let log_rewards = rewards.iter().map(|h| h.ln()).collect();
        Ok(Self {
            rewards,
            log_rewards,
        })
    }

    /// Reward factors drawn uniformly in (0, 1].
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        let h = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        Self::new(h)
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Per-user cost `3 log(1 + e^a) − a`.
    pub fn cost(a: f64) -> f64 {
        3.0 * softplus(a) - a
    }

    fn log_total(&self, a: &[f64]) -> f64 {
        log1p_sum_exp(self.log_rewards.iter().zip(a).map(|(lh, x)| lh + x))
    }

    fn log_total_without(&self, i: usize, a: &[f64]) -> f64 {
        log1p_sum_exp(
            self.log_rewards
                .iter()
                .zip(a)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (lh, x))| lh + x),
        )
    }

    fn own_partial(&self, i: usize, a: &[f64], log_total: f64) -> f64 {
        let share = (self.log_rewards[i] + a[i] - log_total).exp();
        share - 3.0 * logistic(a[i]) + 1.0
    }
}

impl PotentialGame for FlowControlGame {
    fn n_agents(&self) -> usize {
        self.rewards.len()
    }

    fn potential(&self, a: &[f64]) -> f64 {
        self.log_total(a) - a.iter().map(|&x| Self::cost(x)).sum::<f64>()
    }

    fn utility(&self, i: usize, a: &[f64]) -> f64 {
        // log(1 + x/y) = log(y + x) − log(y), both sides as log-sum-exp.
        self.log_total(a) - self.log_total_without(i, a) - Self::cost(a[i])
    }

    fn utility_partial(&self, i: usize, a: &[f64]) -> f64 {
        // d/da_i of log(1+S) − log(1+S_{−i}) − c(a_i); the middle term is
        // constant in a_i.
        self.own_partial(i, a, self.log_total(a))
    }

    fn potential_partial(&self, i: usize, a: &[f64]) -> f64 {
        self.own_partial(i, a, self.log_total(a))
    }

    fn potential_gradient(&self, a: &[f64]) -> Vec<f64> {
        let lt = self.log_total(a);
        (0..a.len()).map(|i| self.own_partial(i, a, lt)).collect()
    }
}

/// Identical-interest game `U_i = φ = −‖a − c‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    center: Vec<f64>,
}

impl QuadraticGame {
    pub fn new(center: Vec<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Precondition("quadratic game needs N >= 1".into()));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("quadratic center"));
        }
        Ok(Self { center })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl PotentialGame for QuadraticGame {
    fn n_agents(&self) -> usize {
        self.center.len()
    }

    fn potential(&self, a: &[f64]) -> f64 {
        -a.iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) * (x - c))
            .sum::<f64>()
    }

    fn utility(&self, _i: usize, a: &[f64]) -> f64 {
        self.potential(a)
    }

    fn utility_partial(&self, i: usize, a: &[f64]) -> f64 {
        self.potential_partial(i, a)
    }

    fn potential_partial(&self, i: usize, a: &[f64]) -> f64 {
        -2.0 * (a[i] - self.center[i])
    }
}

fn sample_cube(n: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-radius..=radius)).collect()
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!("radius must be > 0, got {radius}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    /// max |∂U_i/∂a_i − ∂φ/∂a_i|, both analytic.
    pub max_analytic_discrepancy: f64,
    /// max |∂U_i/∂a_i − central difference of φ|.
    pub max_fd_discrepancy: f64,
}

/// Samples the cube `[−radius, radius]^N` and measures how far the utilities'
/// own-action partials are from the potential's partials.
pub fn check_potential_identity(
    game: &dyn PotentialGame,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<IdentityReport> {
    check_radius(radius)?;
    let n = game.n_agents();
    let mut rng = stream(seed, TAG_PROBE);
    let mut report = IdentityReport {
        samples,
        max_analytic_discrepancy: 0.0,
        max_fd_discrepancy: 0.0,
    };
    for _ in 0..samples {
        let a = sample_cube(n, radius, &mut rng);
        for i in 0..n {
            let du = game.utility_partial(i, &a);
            let dphi = game.potential_partial(i, &a);
            let fd = finite_diff_partial(game, i, &a, FD_STEP)?;
            report.max_analytic_discrepancy = report.max_analytic_discrepancy.max((du - dphi).abs());
            report.max_fd_discrepancy = report.max_fd_discrepancy.max((du - fd).abs());
        }
    }
    Ok(report)
}

/// Largest `|∂φ/∂a_i|` seen over uniform samples of the cube.
pub fn gradient_bound_probe(
    game: &dyn PotentialGame,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    check_radius(radius)?;
    let mut rng = stream(seed, TAG_PROBE ^ 1);
    let mut max = 0.0_f64;
    for _ in 0..samples {
        let a = sample_cube(game.n_agents(), radius, &mut rng);
        for g in game.potential_gradient(&a) {
            max = max.max(g.abs());
        }
    }
    Ok(max)
}

/// Empirical coordinate-wise Lipschitz constant of `∇φ`:
/// `max |∂_iφ(x) − ∂_iφ(y)| / ‖x − y‖` over sampled pairs.
///
/// Pair separations are log-uniform in `[1e-3, 1]` so the local curvature is
/// seen as well as the long-range slope.
pub fn lipschitz_probe(
    game: &dyn PotentialGame,
    pairs: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    check_radius(radius)?;
    let n = game.n_agents();
    let mut rng = stream(seed, TAG_PROBE ^ 2);
    let mut max = 0.0_f64;
    for _ in 0..pairs {
        let x = sample_cube(n, radius, &mut rng);
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let sep = 10f64.powf(rng.random_range(-3.0..=0.0));
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + sep * d / norm).collect();
        let gx = game.potential_gradient(&x);
        let gy = game.potential_gradient(&y);
        for (a, b) in gx.iter().zip(&gy) {
            max = max.max((a - b).abs() / sep);
        }
    }
    Ok(max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub directions: usize,
    /// Smallest scan radius beyond which `φ(t·u)` decreased along every
    /// probed direction, if one exists within the scan.
    pub t0: Option<f64>,
    /// Potential at the end of the scan, worst direction.
    pub max_phi_at_t_max: f64,
}

/// Scans `φ(t·u)` on `t ∈ [0, t_max]` along random unit directions and finds
/// the radius after which the potential is strictly decreasing on each ray.
pub fn coercivity_probe(
    game: &dyn PotentialGame,
    directions: usize,
    t_max: f64,
    steps: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    check_radius(t_max)?;
    if steps < 2 {
        return Err(Error::Precondition("coercivity scan needs >= 2 steps".into()));
    }
    let n = game.n_agents();
    let mut rng = stream(seed, TAG_PROBE ^ 3);
    let mut t0 = Some(0.0_f64);
    let mut max_phi = f64::NEG_INFINITY;
    for _ in 0..directions {
        let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = u.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|d| *d /= norm);
        let values: Vec<f64> = (0..=steps)
            .map(|k| {
                let t = t_max * k as f64 / steps as f64;
                let a: Vec<f64> = u.iter().map(|d| t * d).collect();
                game.potential(&a)
            })
            .collect();
        max_phi = max_phi.max(*values.last().unwrap());
        // last index k such that values[k..] is strictly decreasing
        let mut k = steps;
        while k > 0 && values[k - 1] > values[k] {
            k -= 1;
        }
        if k == steps {
            t0 = None;
        } else if let Some(cur) = t0 {
            t0 = Some(cur.max(t_max * k as f64 / steps as f64));
        }
    }
    Ok(CoercivityReport {
        directions,
        t0,
        max_phi_at_t_max: max_phi,
    })
}
