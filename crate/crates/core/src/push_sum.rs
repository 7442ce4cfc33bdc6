//! Perturbed push-sum over a directed graph.
//!
//! Every agent `i` keeps `w_i`, `x_i`, `â_i ∈ ℝ^d` and a weight `y_i > 0`.
//! One synchronous round:
//!
//! ```text
//! w_i(t+1) = Σ_{j ∈ N_i^in(t)} x_j(t) / d_j(t)
//! y_i(t+1) = Σ_{j ∈ N_i^in(t)} y_j(t) / d_j(t)
//! â_i(t+1) = w_i(t+1) / y_i(t+1)
//! x_i(t+1) = w_i(t+1) + e_i(t+1)
//! ```
//!
//! Column sums of the mixing are one, so `Σ y_i = N` and
//! `Σ_i w_i(t+1) = Σ_i x_i(t)` hold up to rounding.

use crate::error::{Error, Result};
use crate::graph::Digraph;

#[derive(Debug, Clone, PartialEq)]
pub struct PushSumState {
    pub w: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub estimate: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
}

/// The first three updates of a round, before perturbations are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    pub w: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub estimate: Vec<Vec<f64>>,
}

impl PushSumState {
    /// `y_i(0) = 1`, `w_i(0) = x_i(0)`.
    pub fn new(initial_x: Vec<Vec<f64>>) -> Result<Self> {
        let n = initial_x.len();
        if n == 0 {
            return Err(Error::Precondition("push-sum needs at least one agent".into()));
        }
        let d = initial_x[0].len();
        for x in &initial_x {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial push-sum state"));
            }
        }
        Ok(Self {
            w: initial_x.clone(),
            y: vec![1.0; n],
            estimate: initial_x.clone(),
            x: initial_x,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// `x̄ = (1/N) Σ_j x_j`.
    pub fn average(&self) -> Vec<f64> {
        column_mean(&self.x)
    }

    /// Mixing half of a round: new `w`, `y` and estimates.
    pub fn mix(&self, g: &Digraph) -> Result<Mixed> {
        let n = self.n_agents();
        if g.n_nodes() != n {
            return Err(Error::NodeCountMismatch {
                expected: n,
                got: g.n_nodes(),
            });
        }
        let d = self.dim();
        let mut w = vec![vec![0.0; d]; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            let deg = g.out_degree(j);
            if deg == 0 {
                return Err(Error::ZeroOutDegree { node: j });
            }
            let inv = 1.0 / deg as f64;
            let yj = self.y[j] * inv;
            for &i in g.out_neighbors(j) {
                y[i] += yj;
                for (wi, xj) in w[i].iter_mut().zip(&self.x[j]) {
                    *wi += xj * inv;
                }
            }
        }
        let estimate = w
            .iter()
            .zip(&y)
            .map(|(wi, yi)| wi.iter().map(|v| v / yi).collect())
            .collect();
        Ok(Mixed { w, y, estimate })
    }

    /// Completes a round with `x_i(t+1) = w_i(t+1) + e_i(t+1)`.
    pub fn finish(mixed: Mixed, perturbations: &[Vec<f64>]) -> Result<Self> {
        let n = mixed.y.len();
        if perturbations.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: perturbations.len(),
            });
        }
        let x = mixed
            .w
            .iter()
            .zip(perturbations)
            .map(|(wi, ei)| {
                if ei.len() != wi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: wi.len(),
                        got: ei.len(),
                    });
                }
                Ok(wi.iter().zip(ei).map(|(a, b)| a + b).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            w: mixed.w,
            y: mixed.y,
            estimate: mixed.estimate,
            x,
        })
    }

    /// One full synchronous round.
    pub fn round(&self, g: &Digraph, perturbations: &[Vec<f64>]) -> Result<Self> {
        Self::finish(self.mix(g)?, perturbations)
    }

    /// Unperturbed round.
    pub fn round_unperturbed(&self, g: &Digraph) -> Result<Self> {
        let zero = vec![vec![0.0; self.dim()]; self.n_agents()];
        self.round(g, &zero)
    }
}

pub fn column_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// `‖â_i − x̄‖` for every agent, with `x̄` the average of the current `x`.
pub fn consensus_error(state: &PushSumState) -> Vec<f64> {
    tracking_error(&state.estimate, &state.average())
}

/// `‖â_i − reference‖` for every agent.
pub fn tracking_error(estimates: &[Vec<f64>], reference: &[f64]) -> Vec<f64> {
    estimates.iter().map(|e| l2_distance(e, reference)).collect()
}

/// Mixing constants `(δ, λ)` of the push-sum tracking bound, stored as
/// logarithms because the worst-case `δ = N^{−NS}` underflows quickly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingBound {
    ln_inv_delta: f64,
    ln_lambda: f64,
}

impl MixingBound {
    pub fn new(delta: f64, lambda: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Precondition(format!("delta {delta} not in (0,1]")));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Precondition(format!("lambda {lambda} not in [0,1)")));
        }
        Ok(Self {
            ln_inv_delta: -delta.ln(),
            ln_lambda: lambda.ln(),
        })
    }

    /// `δ = 1/N^{NS}`, `λ = (1 − δ)^{1/S}`. For `N = 1` this gives `λ = 0`.
    pub fn worst_case(n: usize, s: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::Precondition("need n >= 1 and s >= 1".into()));
        }
        let ln_inv_delta = (n * s) as f64 * (n as f64).ln();
        let delta = (-ln_inv_delta).exp();
        let ln_lambda = if n == 1 {
            f64::NEG_INFINITY
        } else if delta > 0.0 {
            (-delta).ln_1p() / s as f64
        } else {
            // δ below the smallest double; ln(1 − δ) ≈ −δ underflows too.
            -0.0
        };
        Ok(Self {
            ln_inv_delta,
            ln_lambda,
        })
    }

    pub fn delta(&self) -> f64 {
        (-self.ln_inv_delta).exp()
    }

    pub fn lambda(&self) -> f64 {
        self.ln_lambda.exp()
    }

    pub fn ln_inv_delta(&self) -> f64 {
        self.ln_inv_delta
    }

    pub fn ln_lambda(&self) -> f64 {
        self.ln_lambda
    }

    fn lambda_pow(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            (k as f64 * self.ln_lambda).exp()
        }
    }

    /// Right-hand side of the tracking bound for `‖â_i(t+1) − x̄(t)‖`:
    ///
    /// `(8/δ) (λ^t Σ_j ‖x_j(0)‖₁ + Σ_{s=1}^{t} λ^{t−s} Σ_j ‖e_j(s)‖₁)`
    ///
    /// `perturbation_l1[s − 1]` holds `Σ_j ‖e_j(s)‖₁`; only the first `t`
    /// entries are read. Returns `+∞` when `8/δ` exceeds the double range.
    pub fn tracking_bound(&self, x0_l1: f64, perturbation_l1: &[f64], t: usize) -> Result<f64> {
        if perturbation_l1.len() < t {
            return Err(Error::Precondition(format!(
                "need {t} perturbation norms, got {}",
                perturbation_l1.len()
            )));
        }
        let mut inner = self.lambda_pow(t) * x0_l1;
        for (k, e) in perturbation_l1[..t].iter().enumerate() {
            let s = k + 1;
            inner += self.lambda_pow(t - s) * e;
        }
        if inner == 0.0 {
            return Ok(0.0);
        }
        Ok((8f64.ln() + self.ln_inv_delta + inner.ln()).exp())
    }
}

/// Least-squares fit of `err(t) ≈ C λ̂^t` over the positive entries.
pub fn fit_geometric_rate(errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(t, e)| (t as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some((sxy / sxx).exp())
}
