//! Deciding whether a logged run has settled.
//!
//! A run has plateaued when the mean potential over the trailing
//! `window_frac` of the horizon is within `phi_rel_tol` of the final value and
//! the final gradient norm is at most `grad_threshold`. The onset is the
//! earliest logged step after which every later row keeps both the potential
//! (relative to the trailing mean) and the gradient norm inside tolerance.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauCriterion {
    pub phi_rel_tol: f64,
    pub grad_threshold: f64,
    pub window_frac: f64,
}

impl PlateauCriterion {
    pub const COMM: Self = Self {
        phi_rel_tol: 0.01,
        grad_threshold: 0.05,
        window_frac: 0.1,
    };

    pub const PAYOFF: Self = Self {
        phi_rel_tol: 0.02,
        grad_threshold: 0.1,
        window_frac: 0.1,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateauReport {
    pub plateaued: bool,
    pub final_phi: f64,
    pub final_grad_norm: f64,
    pub window_mean: f64,
    pub onset: Option<u64>,
}

fn within(v: f64, reference: f64, tol: f64) -> bool {
    (v - reference).abs() <= tol * reference.abs().max(f64::MIN_POSITIVE)
}

/// `t`, `phi` and `grad` are parallel columns of a trace in increasing `t`.
pub fn assess(t: &[u64], phi: &[f64], grad: &[f64], crit: &PlateauCriterion) -> PlateauReport {
    assert!(t.len() == phi.len() && t.len() == grad.len());
    let Some(&t_end) = t.last() else {
        return PlateauReport {
            plateaued: false,
            final_phi: f64::NAN,
            final_grad_norm: f64::NAN,
            window_mean: f64::NAN,
            onset: None,
        };
    };
    let final_phi = *phi.last().unwrap();
    let final_grad_norm = *grad.last().unwrap();
    let window_start = t_end.saturating_sub((crit.window_frac * t_end as f64).ceil() as u64);
    let window: Vec<f64> = t
        .iter()
        .zip(phi)
        .filter(|(ti, _)| **ti >= window_start)
        .map(|(_, p)| *p)
        .collect();
    let window_mean = window.iter().sum::<f64>() / window.len() as f64;
    let finite = window_mean.is_finite() && final_grad_norm.is_finite();
    let plateaued = finite
        && within(window_mean, final_phi, crit.phi_rel_tol)
        && final_grad_norm <= crit.grad_threshold;
    let onset = plateaued.then(|| {
        let mut k = t.len();
        while k > 0
            && within(phi[k - 1], window_mean, crit.phi_rel_tol)
            && grad[k - 1] <= crit.grad_threshold
        {
            k -= 1;
        }
        // the final row satisfies both tests, so k < len
        t[k.min(t.len() - 1)]
    });
    PlateauReport {
        plateaued,
        final_phi,
        final_grad_norm,
        window_mean,
        onset,
    }
}
