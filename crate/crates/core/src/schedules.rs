//! Power-law step-size and variance sequences, and their admissibility.
//!
//! A schedule is `value(t) = coefficient · t^{−exponent}` for `t ≥ 1`. The
//! convergence conditions of the learners are statements about infinite
//! series in these values; for the power-law family they reduce to linear
//! inequalities in the exponents, which is what the validators check. The
//! numeric probes sum the series directly and are used to cross-check those
//! verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub coefficient: f64,
    pub exponent: f64,
}

impl ScheduleSpec {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        let s = Self {
            coefficient,
            exponent,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.coefficient > 0.0 && self.coefficient.is_finite()) {
            return Err(Error::Config(format!(
                "schedule coefficient must be > 0, got {}",
                self.coefficient
            )));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::Config(format!(
                "schedule exponent must be >= 0, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    /// `coefficient · t^{−exponent}`; `t = 0` is read as `t = 1`.
    pub fn value(&self, t: u64) -> f64 {
        self.coefficient * (t.max(1) as f64).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    Inadmissible,
    Inconclusive,
}

/// Which learner the schedules are meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Comm,
    OnePoint,
    TwoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    /// The inequality with numbers substituted, e.g. `p+3q ≤ 1: 0.99 ≤ 1`.
    pub inequality: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub target: Target,
    pub admissibility: Admissibility,
    pub conditions: Vec<Condition>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn admissible(&self) -> bool {
        self.admissibility == Admissibility::Admissible
    }

    fn from_conditions(target: Target, conditions: Vec<Condition>, notes: Vec<String>) -> Self {
        let admissibility = if conditions.iter().all(|c| c.verdict == Verdict::Pass) {
            Admissibility::Admissible
        } else if conditions.iter().any(|c| c.verdict == Verdict::Fail) {
            Admissibility::Inadmissible
        } else {
            Admissibility::Inconclusive
        };
        Self {
            target,
            admissibility,
            conditions,
            notes,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.conditions.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.conditions {
            writeln!(f, "{:<width$}  {:<13} {}", c.name, c.verdict.to_string(), c.inequality)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        let verdict = match self.admissibility {
            Admissibility::Admissible => "admissible",
            Admissibility::Inadmissible => "inadmissible (sufficient conditions not met)",
            Admissibility::Inconclusive => "inconclusive (not a power-law schedule)",
        };
        write!(f, "result: {verdict}")
    }
}

fn verdict(pass: bool) -> Verdict {
    if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn cond(name: &'static str, inequality: String, pass: bool) -> Condition {
    let v = verdict(pass);
    Condition {
        name,
        inequality: format!("{inequality} → {v}"),
        verdict: v,
    }
}

/// Step sizes for the communication-based learner: `γ(t) = O(t^{−ν})` with
/// `1/2 < ν ≤ 1`.
pub fn validate_comm_schedule(gamma: &ScheduleSpec) -> ValidationReport {
    let nu = gamma.exponent;
    let c = cond(
        "step exponent",
        format!("1/2 < ν ≤ 1: ν = {nu}"),
        nu > 0.5 && nu <= 1.0,
    );
    ValidationReport::from_conditions(Target::Comm, vec![c], Vec::new())
}

/// Conditions for the payoff-based learners with `γ = c_γ t^{−p}`,
/// `σ = c_σ t^{−q}`:
///
/// 1. `Σ γσ³ = ∞`  ⇔ `p + 3q ≤ 1`
/// 2. `Σ γσ⁴ < ∞`  ⇔ `p + 4q > 1`
/// 3. `Σ γ² < ∞`   ⇔ `2p > 1`
/// 4. `Σ (γ/√tail)³ < ∞` where `tail(t) = Σ_{k>t} γ²(k) = Θ(t^{1−2p})`, so the
///    ratio is `Θ(t^{−1/2})` and this holds whenever the tail is finite (`2p > 1`)
/// 5. `Σ γσ⁴/√tail < ∞` ⇔ `p + 4q − (2p−1)/2 > 1` ⇔ `q > 1/8`
///
/// The two-point variant's own sufficient conditions omit `Σ γ² < ∞`; the
/// full set is applied for both variants and the report notes it.
pub fn validate_payoff_schedules(
    gamma: &ScheduleSpec,
    sigma: &ScheduleSpec,
    target: Target,
) -> ValidationReport {
    let p = gamma.exponent;
    let q = sigma.exponent;
    let tail_finite = 2.0 * p > 1.0;
    let conditions = vec![
        cond(
            "sum gamma*sigma^3 diverges",
            format!("p+3q ≤ 1: {} ≤ 1", round(p + 3.0 * q)),
            p + 3.0 * q <= 1.0,
        ),
        cond(
            "sum gamma*sigma^4 converges",
            format!("p+4q > 1: {} > 1", round(p + 4.0 * q)),
            p + 4.0 * q > 1.0,
        ),
        cond(
            "sum gamma^2 converges",
            format!("2p > 1: {} > 1", round(2.0 * p)),
            tail_finite,
        ),
        cond(
            "sum (gamma/sqrt(tail))^3 converges",
            format!(
                "ratio = Θ(t^-1/2) needs finite tail, 2p > 1: {} > 1",
                round(2.0 * p)
            ),
            tail_finite,
        ),
        cond(
            "sum gamma*sigma^4/sqrt(tail) converges",
            format!("q > 1/8: {} > 0.125", round(q)),
            tail_finite && q > 0.125,
        ),
    ];
    let mut notes = Vec::new();
    if target == Target::TwoPoint {
        notes.push(
            "two-point sufficient conditions do not require sum gamma^2 < inf; \
             the full one-point set is applied"
                .to_string(),
        );
    }
    if target == Target::Comm {
        notes.push("payoff conditions applied to a comm target".to_string());
    }
    ValidationReport::from_conditions(target, conditions, notes)
}

fn round(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// `Σ_{t=1}^{terms} term(t)`.
pub fn partial_sum_probe(term: impl Fn(u64) -> f64, terms: u64) -> Result<f64> {
    if terms == 0 {
        return Err(Error::Precondition("terms must be >= 1".into()));
    }
    Ok((1..=terms).map(term).sum())
}

/// Integral estimate of `Σ_{k>t} γ²(k)`: `c² t^{1−2p} / (2p − 1)`.
/// `None` when `2p ≤ 1` (the tail diverges).
pub fn tail_estimate(gamma: &ScheduleSpec, t: u64) -> Option<f64> {
    let r = 2.0 * gamma.exponent - 1.0;
    if r <= 0.0 {
        return None;
    }
    let c2 = gamma.coefficient * gamma.coefficient;
    Some(c2 * (t.max(1) as f64).powf(-r) / r)
}

/// `Σ_{k>t} γ²(k)` summed explicitly up to `terms`, with the integral
/// remainder from `terms + 1/2` onward.
pub fn numeric_tail(gamma: &ScheduleSpec, t: u64, terms: u64) -> Option<f64> {
    let r = 2.0 * gamma.exponent - 1.0;
    if r <= 0.0 || terms <= t {
        return None;
    }
    let head: f64 = (t + 1..=terms).map(|k| gamma.value(k).powi(2)).sum();
    let c2 = gamma.coefficient * gamma.coefficient;
    let rest = c2 * (terms as f64 + 0.5).powf(-r) / r;
    Some(head + rest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesBehaviour {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesProbe {
    /// `(n, Σ_{t=1}^{n} term(t))` at every power of ten up to the term budget.
    pub checkpoints: Vec<(u64, f64)>,
    /// Ratio of the last two decade increments. For `t^{−r}` it tends to
    /// `10^{1−r}`: below one iff the series converges.
    pub increment_ratio: f64,
    pub behaviour: SeriesBehaviour,
}

/// Ratios at or above `1 − RATIO_SLACK` count as divergence, so exactly
/// harmonic terms (ratio → 1 from below) are classified divergent.
pub const RATIO_SLACK: f64 = 1e-3;

/// Sums `term` to `terms` (a power of ten, at least 1000) and classifies the
/// series by how successive decade increments scale.
pub fn probe_series(term: impl Fn(u64) -> f64, terms: u64) -> Result<SeriesProbe> {
    let decades = (terms as f64).log10().round() as u32;
    if terms < 1000 || 10u64.pow(decades) != terms {
        return Err(Error::Precondition(format!(
            "series probe needs a power of ten >= 1000 terms, got {terms}"
        )));
    }
    let mut checkpoints = Vec::with_capacity(decades as usize);
    let mut sum = 0.0;
    let mut next = 10u64;
    for t in 1..=terms {
        sum += term(t);
        if t == next {
            checkpoints.push((t, sum));
            next *= 10;
        }
    }
    let k = checkpoints.len();
    let last = checkpoints[k - 1].1 - checkpoints[k - 2].1;
    let prev = checkpoints[k - 2].1 - checkpoints[k - 3].1;
    let increment_ratio = last / prev;
    let behaviour = if increment_ratio >= 1.0 - RATIO_SLACK {
        SeriesBehaviour::Divergent
    } else {
        SeriesBehaviour::Convergent
    };
    Ok(SeriesProbe {
        checkpoints,
        increment_ratio,
        behaviour,
    })
}

/// The five payoff conditions' series, summed numerically. The tail uses
/// [`tail_estimate`]; with a divergent tail conditions 4 and 5 are reported
/// as failed without summing.
pub fn probe_payoff_series(
    gamma: &ScheduleSpec,
    sigma: &ScheduleSpec,
    terms: u64,
) -> Result<Vec<(&'static str, Option<SeriesProbe>, SeriesBehaviour)>> {
    let g = |t: u64| gamma.value(t);
    let s = |t: u64| sigma.value(t);
    let tail = |t: u64| tail_estimate(gamma, t);
    let mut out = vec![
        (
            "sum gamma*sigma^3 diverges",
            Some(probe_series(|t| g(t) * s(t).powi(3), terms)?),
            SeriesBehaviour::Divergent,
        ),
        (
            "sum gamma*sigma^4 converges",
            Some(probe_series(|t| g(t) * s(t).powi(4), terms)?),
            SeriesBehaviour::Convergent,
        ),
        (
            "sum gamma^2 converges",
            Some(probe_series(|t| g(t).powi(2), terms)?),
            SeriesBehaviour::Convergent,
        ),
    ];
    if tail(1).is_some() {
        out.push((
            "sum (gamma/sqrt(tail))^3 converges",
            Some(probe_series(|t| (g(t) / tail(t).unwrap().sqrt()).powi(3), terms)?),
            SeriesBehaviour::Convergent,
        ));
        out.push((
            "sum gamma*sigma^4/sqrt(tail) converges",
            Some(probe_series(
                |t| g(t) * s(t).powi(4) / tail(t).unwrap().sqrt(),
                terms,
            )?),
            SeriesBehaviour::Convergent,
        ));
    } else {
        out.push(("sum (gamma/sqrt(tail))^3 converges", None, SeriesBehaviour::Convergent));
        out.push(("sum gamma*sigma^4/sqrt(tail) converges", None, SeriesBehaviour::Convergent));
    }
    Ok(out)
}

/// Numeric-only check for schedules outside the power-law family. Verdicts
/// that the probe can decide are reported, but the overall result is always
/// [`Admissibility::Inconclusive`] unless a condition visibly fails.
pub fn probe_arbitrary_schedules(
    gamma: impl Fn(u64) -> f64,
    sigma: impl Fn(u64) -> f64,
    terms: u64,
) -> Result<ValidationReport> {
    let div = |p: &SeriesProbe, want: SeriesBehaviour| {
        if p.behaviour == want {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    };
    let a = probe_series(|t| gamma(t) * sigma(t).powi(3), terms)?;
    let b = probe_series(|t| gamma(t) * sigma(t).powi(4), terms)?;
    let c = probe_series(|t| gamma(t).powi(2), terms)?;
    let conditions = vec![
        Condition {
            name: "sum gamma*sigma^3 diverges",
            inequality: format!("decade increment ratio {:.4}", a.increment_ratio),
            verdict: div(&a, SeriesBehaviour::Divergent),
        },
        Condition {
            name: "sum gamma*sigma^4 converges",
            inequality: format!("decade increment ratio {:.4}", b.increment_ratio),
            verdict: div(&b, SeriesBehaviour::Convergent),
        },
        Condition {
            name: "sum gamma^2 converges",
            inequality: format!("decade increment ratio {:.4}", c.increment_ratio),
            verdict: div(&c, SeriesBehaviour::Convergent),
        },
    ];
    let mut r = ValidationReport::from_conditions(
        Target::OnePoint,
        conditions,
        vec!["numeric probe only; infinite-series conditions cannot be decided".into()],
    );
    if r.admissibility == Admissibility::Admissible {
        r.admissibility = Admissibility::Inconclusive;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(c: f64, e: f64) -> ScheduleSpec {
        ScheduleSpec::new(c, e).unwrap()
    }

    #[test]
    fn value_is_exact_power_law() {
        let g = sched(2.0, 0.6);
        for t in [1u64, 2, 10, 12345, 1_000_000] {
            assert_eq!(g.value(t), 2.0 * (t as f64).powf(-0.6));
        }
        assert_eq!(g.value(0), g.value(1));
        let mut prev = f64::INFINITY;
        for t in 1..1000 {
            let v = g.value(t);
            assert!(v > 0.0 && v <= prev);
            prev = v;
        }
        assert!(ScheduleSpec::new(0.0, 1.0).is_err());
        assert!(ScheduleSpec::new(1.0, -0.1).is_err());
    }

    #[test]
    fn comm_exponent_interval() {
        assert!(validate_comm_schedule(&sched(1.0, 0.9)).admissible());
        assert!(!validate_comm_schedule(&sched(1.0, 0.4)).admissible());
        assert!(validate_comm_schedule(&sched(1.0, 1.0)).admissible());
        assert!(!validate_comm_schedule(&sched(1.0, 0.5)).admissible());
        assert!(!validate_comm_schedule(&sched(1.0, 1.01)).admissible());
    }

    #[test]
    fn payoff_reference_pairs() {
        let ok = validate_payoff_schedules(&sched(1.0, 0.6), &sched(1.0, 0.13), Target::OnePoint);
        assert!(ok.admissible(), "{ok}");
        assert_eq!(ok.conditions.len(), 5);
        assert!(ok.conditions[0].inequality.contains("0.99 ≤ 1"));
        assert!(ok.conditions[1].inequality.contains("1.12 > 1"));

        let low_q = validate_payoff_schedules(&sched(1.0, 0.6), &sched(1.0, 0.10), Target::OnePoint);
        assert!(!low_q.admissible());
        assert_eq!(low_q.conditions[1].verdict, Verdict::Fail);
        assert_eq!(low_q.conditions[4].verdict, Verdict::Fail);
        assert_eq!(low_q.conditions[0].verdict, Verdict::Pass);

        let flat = validate_payoff_schedules(&sched(1.0, 1.0), &sched(1.0, 0.0), Target::OnePoint);
        assert!(!flat.admissible());
        // boundary p + 3q = 1 counts as divergent
        assert_eq!(flat.conditions[0].verdict, Verdict::Pass);
        assert_eq!(flat.conditions[1].verdict, Verdict::Fail);

        let half = validate_payoff_schedules(&sched(1.0, 0.5), &sched(1.0, 0.13), Target::OnePoint);
        assert_eq!(half.conditions[2].verdict, Verdict::Fail);

        let two = validate_payoff_schedules(&sched(1.0, 0.6), &sched(1.0, 0.13), Target::TwoPoint);
        assert!(two.admissible());
        assert_eq!(two.notes.len(), 1);
    }

    #[test]
    fn report_renders_every_condition() {
        let r = validate_payoff_schedules(&sched(1.0, 0.6), &sched(1.0, 0.13), Target::OnePoint);
        let text = r.to_string();
        assert_eq!(text.lines().count(), 6);
        assert!(text.ends_with("result: admissible"));
    }

    #[test]
    fn harmonic_is_divergent_and_square_is_convergent() {
        let h = probe_series(|t| 1.0 / t as f64, 10_000).unwrap();
        assert_eq!(h.behaviour, SeriesBehaviour::Divergent);
        let sq = probe_series(|t| 1.0 / (t as f64).powi(2), 10_000).unwrap();
        assert_eq!(sq.behaviour, SeriesBehaviour::Convergent);
        assert!((sq.checkpoints.last().unwrap().1 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-3);
        assert!(probe_series(|_| 1.0, 500).is_err());
        assert!(probe_series(|_| 1.0, 2000).is_err());
    }

    #[test]
    fn partial_sums() {
        assert_eq!(partial_sum_probe(|t| t as f64, 4).unwrap(), 10.0);
        assert!(partial_sum_probe(|_| 1.0, 0).is_err());
    }

    #[test]
    fn tail_estimates() {
        let g = sched(1.0, 0.6);
        let est = tail_estimate(&g, 1000).unwrap();
        assert!((est - 1000f64.powf(-0.2) / 0.2).abs() < 1e-12);
        let num = numeric_tail(&g, 1000, 100_000).unwrap();
        assert!((num / est - 1.0).abs() < 0.01, "{num} vs {est}");
        assert!(tail_estimate(&sched(1.0, 0.5), 10).is_none());
    }

    #[test]
    fn arbitrary_schedules_are_inconclusive_at_best() {
        let r = probe_arbitrary_schedules(
            |t| 1.0 / (t as f64).powf(0.6),
            |t| 1.0 / (t as f64).powf(0.13),
            100_000,
        )
        .unwrap();
        assert_eq!(r.admissibility, Admissibility::Inconclusive);
        let bad = probe_arbitrary_schedules(|_| 0.1, |_| 1.0, 10_000).unwrap();
        assert_eq!(bad.admissibility, Admissibility::Inadmissible);
    }
}
