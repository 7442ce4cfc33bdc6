//! Experiment configuration, orchestration and persistence.
//!
//! An experiment is a TOML file naming a game, an algorithm and its
//! schedules, plus a list of seeds. [`run_experiment`] performs one run per
//! seed (in parallel), writes each trace to `traces/seed-<s>.csv`, and
//! writes `summary.csv` (deterministic) and `timing.csv` (wall clock) next to
//! a snapshot of the resolved configuration.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::{fmt_f64, run_comm, CommConfig, CommTrace, NoiseSpec};
use crate::error::{Error, Result};
use crate::game::{
    check_potential_identity, coercivity_probe, gradient_bound_probe, lipschitz_probe,
    FlowControlGame, IdentityReport, CoercivityReport, PotentialGame, QuadraticGame,
};
use crate::graph::RandomSConnected;
use crate::payoff::{run_payoff, EstimatorMode, PayoffConfig, PayoffTrace};
use crate::plateau::{assess, PlateauCriterion, PlateauReport};
use crate::rng::{derive_seed, stream, TAG_GRAPH, TAG_INIT, TAG_REWARDS};
use crate::schedules::{validate_comm_schedule, validate_payoff_schedules, ScheduleSpec};

/// Environment variable that relocates the default output root.
pub const OUTPUT_ROOT_ENV: &str = "POTENTIAL_PLAY_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Comm,
    PayoffOnePoint,
    PayoffTwoPoint,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Comm => "comm",
            Algorithm::PayoffOnePoint => "payoff-one-point",
            Algorithm::PayoffTwoPoint => "payoff-two-point",
        }
    }

    pub fn estimator(self) -> Option<EstimatorMode> {
        match self {
            Algorithm::Comm => None,
            Algorithm::PayoffOnePoint => Some(EstimatorMode::OnePoint),
            Algorithm::PayoffTwoPoint => Some(EstimatorMode::TwoPoint),
        }
    }

    pub fn criterion(self) -> PlateauCriterion {
        match self {
            Algorithm::Comm => PlateauCriterion::COMM,
            _ => PlateauCriterion::PAYOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameSpec {
    FlowControl {
        n: usize,
        /// Explicit reward factors. When absent they are drawn in (0, 1].
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<Vec<f64>>,
        /// Seed for drawn rewards, shared by every run. When absent each run
        /// draws its own from its seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_seed: Option<u64>,
    },
    Quadratic {
        center: Vec<f64>,
    },
}

impl GameSpec {
    pub fn n_agents(&self) -> usize {
        match self {
            GameSpec::FlowControl { n, .. } => *n,
            GameSpec::Quadratic { center } => center.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchedulesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<ScheduleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_density")]
    pub density: f64,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            window: default_window(),
            density: default_density(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// Uniform on the sphere of this radius around the origin; for the
    /// communication learner every agent draws its own `x_i(0)`.
    Sphere { radius: f64 },
    /// The same vector for every agent.
    Explicit { values: Vec<f64> },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Sphere { radius: 10.0 }
    }
}

fn default_window() -> usize {
    4
}
fn default_density() -> f64 {
    0.1
}
fn default_horizon() -> usize {
    4000
}
fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}
fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    pub game: GameSpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
    /// Append per-agent actions (comm) or means (payoff) to the traces.
    #[serde(default)]
    pub record_actions: bool,
    /// Skip schedule admissibility checks.
    #[serde(default)]
    pub force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub schedules: SchedulesSpec,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub init: InitSpec,
}

impl ExperimentConfig {
    /// Defaults: `γ = 1/t^0.9` for comm, `γ = 1/t^0.6`, `σ = 1/t^0.13` for payoff.
    pub fn gamma(&self) -> ScheduleSpec {
        self.schedules.gamma.unwrap_or(match self.algorithm {
            Algorithm::Comm => ScheduleSpec {
                coefficient: 1.0,
                exponent: 0.9,
            },
            _ => ScheduleSpec {
                coefficient: 1.0,
                exponent: 0.6,
            },
        })
    }

    pub fn sigma(&self) -> ScheduleSpec {
        self.schedules.sigma.unwrap_or(ScheduleSpec {
            coefficient: 1.0,
            exponent: 0.13,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.game.n_agents()
    }

    /// Copy with every defaulted schedule written out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.schedules.gamma = Some(self.gamma());
        c.schedules.sigma = match self.algorithm {
            Algorithm::Comm => None,
            _ => Some(self.sigma()),
        };
        c
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents();
        if n == 0 {
            return Err(Error::Config("game needs at least one agent".into()));
        }
        if self.name.trim().is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        if let GameSpec::FlowControl { h: Some(h), .. } = &self.game {
            if h.len() != n {
                return Err(Error::Config(format!("h has {} entries, expected n = {n}", h.len())));
            }
            if let Some((i, v)) = h.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v <= 1.0)) {
                return Err(Error::Config(format!("h_i ∈ (0,1] violated: h_{} = {v}", i + 1)));
            }
        }
        if let GameSpec::Quadratic { center } = &self.game {
            if center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config("quadratic center must be finite".into()));
            }
        }
        match &self.init {
            InitSpec::Sphere { radius } if !(*radius >= 0.0 && radius.is_finite()) => {
                return Err(Error::Config(format!("init radius must be >= 0, got {radius}")));
            }
            InitSpec::Explicit { values } if values.len() != n => {
                return Err(Error::Config(format!(
                    "init values have {} entries, expected n = {n}",
                    values.len()
                )));
            }
            InitSpec::Explicit { values } if values.iter().any(|v| !v.is_finite()) => {
                return Err(Error::Config("init values must be finite".into()));
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.log_stride == 0 {
            return Err(Error::Config("log_stride must be >= 1".into()));
        }
        if self.graph.window == 0 || !(0.0..=1.0).contains(&self.graph.density) {
            return Err(Error::Config(format!(
                "graph needs window >= 1 and density in [0,1], got {} and {}",
                self.graph.window, self.graph.density
            )));
        }
        self.noise.check()?;
        self.gamma().check()?;
        self.sigma().check()?;
        if !self.force {
            let report = match self.algorithm.estimator() {
                None => validate_comm_schedule(&self.gamma()),
                Some(mode) => validate_payoff_schedules(&self.gamma(), &self.sigma(), mode.target()),
            };
            if !report.admissible() {
                return Err(Error::Inadmissible(format!(
                    "schedules rejected (use force to override)\n{report}"
                )));
            }
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a configuration without validating it.
pub fn parse_config_unchecked(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config = parse_config_unchecked(text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Where an experiment writes. An explicit `output` is used as is when
/// absolute; relative paths and the default `<name>` live under `root`
/// (the output root, falling back to `runs`).
pub fn output_dir(config: &ExperimentConfig, root: Option<&Path>) -> PathBuf {
    let root = root.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs"));
    match &config.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => root.join(p),
        None => root.join(&config.name),
    }
}

/// The game a given run plays, and the rewards seed if rewards were drawn.
pub fn build_game(spec: &GameSpec, run_seed: u64) -> Result<(Box<dyn PotentialGame>, Option<u64>)> {
    match spec {
        GameSpec::FlowControl { h: Some(h), .. } => Ok((Box::new(FlowControlGame::new(h.clone())?), None)),
        GameSpec::FlowControl { n, h: None, h_seed } => {
            let seed = h_seed.unwrap_or(run_seed);
            let game = FlowControlGame::random(*n, &mut stream(seed, TAG_REWARDS))?;
            Ok((Box::new(game), Some(seed)))
        }
        GameSpec::Quadratic { center } => Ok((Box::new(QuadraticGame::new(center.clone())?), None)),
    }
}

/// A point drawn uniformly on the sphere of `radius` in `ℝ^n`.
pub fn sphere_point(n: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| radius * x / norm).collect();
        }
    }
}

pub enum Trace {
    Comm(CommTrace),
    Payoff(PayoffTrace),
}

impl Trace {
    pub fn write_csv(&self, w: impl std::io::Write, with_actions: bool) -> Result<()> {
        match self {
            Trace::Comm(t) => t.write_csv(w, with_actions),
            Trace::Payoff(t) => t.write_csv(w, with_actions),
        }
    }

    /// Columns `(t, φ, ‖∇φ‖)` that the plateau criterion reads.
    pub fn plateau_columns(&self) -> (Vec<u64>, Vec<f64>, Vec<f64>) {
        match self {
            Trace::Comm(tr) => (
                tr.rows.iter().map(|r| r.t as u64).collect(),
                tr.rows.iter().map(|r| r.phi).collect(),
                tr.rows.iter().map(|r| r.grad_norm_xbar).collect(),
            ),
            Trace::Payoff(tr) => (
                tr.rows.iter().map(|r| r.t as u64).collect(),
                tr.rows.iter().map(|r| r.phi_mu).collect(),
                tr.rows.iter().map(|r| r.grad_norm_mu).collect(),
            ),
        }
    }

    pub fn diverged(&self) -> bool {
        matches!(self, Trace::Payoff(t) if t.diverged_at.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub h_seed: Option<u64>,
    pub final_phi: f64,
    pub final_grad_norm: f64,
    pub plateaued: bool,
    pub plateau_onset: Option<u64>,
    pub diverged: bool,
    pub wall_seconds: f64,
    /// Relative to the experiment directory.
    pub trace_path: PathBuf,
}

/// Plateau assessment of a finished trace. Diverged runs never plateau.
pub fn assess_trace(trace: &Trace, crit: &PlateauCriterion) -> PlateauReport {
    let (t, phi, grad) = trace.plateau_columns();
    let mut r = assess(&t, &phi, &grad, crit);
    if trace.diverged() {
        r.plateaued = false;
        r.onset = None;
        r.final_phi = f64::NAN;
        r.final_grad_norm = f64::NAN;
    }
    r
}

/// One run of the configuration, in memory.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<(Trace, RunSummary)> {
    let start = Instant::now();
    let (game, h_seed) = build_game(&config.game, seed)?;
    let n = game.n_agents();
    let mut init_rng = stream(seed, TAG_INIT);
    let trace = match config.algorithm.estimator() {
        None => {
            let initial_x = match &config.init {
                InitSpec::Sphere { radius } => (0..n).map(|_| sphere_point(n, *radius, &mut init_rng)).collect(),
                InitSpec::Explicit { values } => vec![values.clone(); n],
            };
            let schedule = RandomSConnected::new(n, config.graph.window, config.graph.density, derive_seed(seed, TAG_GRAPH))?;
            let mut c = CommConfig::new(config.gamma(), initial_x, config.horizon, seed);
            c.noise = config.noise;
            c.log_stride = config.log_stride;
            c.validate = !config.force;
            Trace::Comm(run_comm(game.as_ref(), &schedule, &c)?)
        }
        Some(mode) => {
            let mu0 = match &config.init {
                InitSpec::Sphere { radius } => sphere_point(n, *radius, &mut init_rng),
                InitSpec::Explicit { values } => values.clone(),
            };
            let mut c = PayoffConfig::new(config.gamma(), config.sigma(), mode, mu0, config.horizon, seed);
            c.log_stride = config.log_stride;
            c.validate = !config.force;
            Trace::Payoff(run_payoff(game.as_ref(), &c)?)
        }
    };
    let report = assess_trace(&trace, &config.algorithm.criterion());
    let summary = RunSummary {
        seed,
        h_seed,
        final_phi: report.final_phi,
        final_grad_norm: report.final_grad_norm,
        plateaued: report.plateaued,
        plateau_onset: report.onset,
        diverged: trace.diverged(),
        wall_seconds: start.elapsed().as_secs_f64(),
        trace_path: PathBuf::from("traces").join(format!("seed-{seed}.csv")),
    };
    Ok((trace, summary))
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "seed",
    "h_seed",
    "final_phi",
    "final_grad_norm",
    "plateaued",
    "plateau_onset",
    "diverged",
    "trace",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_summary_csv(summaries: &[RunSummary], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        out.write_record([
            s.seed.to_string(),
            opt(s.h_seed),
            fmt_f64(s.final_phi),
            fmt_f64(s.final_grad_norm),
            s.plateaued.to_string(),
            opt(s.plateau_onset),
            s.diverged.to_string(),
            s.trace_path.to_string_lossy().into_owned(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Runs every seed and persists the results under `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<RunSummary>> {
    config.validate()?;
    fs::create_dir_all(out_dir.join("traces"))?;
    let snapshot = toml::to_string(&config.resolved()).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(out_dir.join("config.toml"), snapshot)?;

    let summaries = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let (trace, summary) = run_single(config, seed)?;
            let file = fs::File::create(out_dir.join(&summary.trace_path))?;
            trace.write_csv(BufWriter::new(file), config.record_actions)?;
            Ok(summary)
        })
        .collect::<Result<Vec<_>>>()?;

    write_summary_csv(&summaries, BufWriter::new(fs::File::create(out_dir.join("summary.csv"))?))?;
    let mut timing = csv::Writer::from_path(out_dir.join("timing.csv"))?;
    timing.write_record(["seed", "wall_seconds"])?;
    for s in &summaries {
        timing.write_record([s.seed.to_string(), format!("{:.6}", s.wall_seconds)])?;
    }
    timing.flush()?;
    Ok(summaries)
}

/// Linear-interpolation quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self {
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFamily {
    Comm,
    Payoff,
}

impl TraceFamily {
    fn columns(self) -> (&'static str, &'static str) {
        match self {
            TraceFamily::Comm => ("phi", "grad_norm_xbar"),
            TraceFamily::Payoff => ("phi_mu", "grad_norm_mu"),
        }
    }

    pub fn criterion(self) -> PlateauCriterion {
        match self {
            TraceFamily::Comm => PlateauCriterion::COMM,
            TraceFamily::Payoff => PlateauCriterion::PAYOFF,
        }
    }
}

/// A trace read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub family: TraceFamily,
    pub t: Vec<u64>,
    pub phi: Vec<f64>,
    pub grad: Vec<f64>,
}

pub fn read_trace(path: &Path) -> Result<LoadedTrace> {
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let family = match header.get(1).map(String::as_str) {
        Some("phi") => TraceFamily::Comm,
        Some("phi_mu") => TraceFamily::Payoff,
        _ => return Err(schema(format!("unrecognised header {header:?}"))),
    };
    let (phi_col, grad_col) = family.columns();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(format!("missing column {name}")))
    };
    let (it, ip, ig) = (find("t")?, find(phi_col)?, find(grad_col)?);
    let mut trace = LoadedTrace {
        path: path.to_path_buf(),
        header: header.clone(),
        family,
        t: Vec::new(),
        phi: Vec::new(),
        grad: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|e| schema(format!("bad number {:?}: {e}", &rec[k])))
        };
        trace.t.push(rec[it].parse().map_err(|e| schema(format!("bad t {:?}: {e}", &rec[it])))?);
        trace.phi.push(num(ip)?);
        trace.grad.push(num(ig)?);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub label: String,
    pub n_agents: Option<usize>,
    pub algorithm: Option<Algorithm>,
    pub family: TraceFamily,
    pub runs: usize,
    pub plateaued: usize,
    pub final_phi: Option<Quartiles>,
    pub final_grad_norm: Option<Quartiles>,
    /// Onset over all runs, counting runs that never plateaued as the horizon.
    pub onset: Option<Quartiles>,
}

/// Aggregates traces of one configuration. With `horizon` given, traces
/// ending early are counted as diverged.
pub fn summarize_traces(label: &str, paths: &[PathBuf], horizon: Option<u64>) -> Result<GroupSummary> {
    if paths.is_empty() {
        return Err(Error::Precondition(format!("{label}: no traces to summarize")));
    }
    let traces = paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    let first = &traces[0];
    if let Some(bad) = traces.iter().find(|t| t.header != first.header) {
        return Err(Error::Schema {
            path: bad.path.clone(),
            message: format!("header differs from {}", first.path.display()),
        });
    }
    let crit = first.family.criterion();
    let mut phis = Vec::new();
    let mut grads = Vec::new();
    let mut onsets = Vec::new();
    let mut plateaued = 0;
    for tr in &traces {
        let end = tr.t.last().copied().unwrap_or(0);
        let horizon = horizon.unwrap_or(end);
        let diverged = end < horizon;
        let r = assess(&tr.t, &tr.phi, &tr.grad, &crit);
        if diverged {
            onsets.push(horizon as f64);
            continue;
        }
        phis.push(r.final_phi);
        grads.push(r.final_grad_norm);
        if r.plateaued {
            plateaued += 1;
        }
        onsets.push(r.onset.unwrap_or(horizon) as f64);
    }
    Ok(GroupSummary {
        label: label.to_string(),
        n_agents: None,
        algorithm: None,
        family: first.family,
        runs: traces.len(),
        plateaued,
        final_phi: Quartiles::of(&phis),
        final_grad_norm: Quartiles::of(&grads),
        onset: Quartiles::of(&onsets),
    })
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    Ok(v)
}

fn summarize_experiment_dir(dir: &Path) -> Result<GroupSummary> {
    let label = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let snapshot = dir.join("config.toml");
    let config: Option<ExperimentConfig> = if snapshot.exists() {
        Some(toml::from_str(&fs::read_to_string(&snapshot)?).map_err(|e| Error::Schema {
            path: snapshot.clone(),
            message: e.message().to_string(),
        })?)
    } else {
        None
    };
    let mut group = summarize_traces(&label, &trace_files(&dir.join("traces"))?, config.as_ref().map(|c| c.horizon as u64))?;
    group.n_agents = config.as_ref().map(|c| c.n_agents());
    group.algorithm = config.as_ref().map(|c| c.algorithm);
    Ok(group)
}

/// Summarizes one experiment directory, or every experiment directory
/// directly below `dir`.
pub fn summarize(dir: &Path) -> Result<Vec<GroupSummary>> {
    if dir.join("traces").is_dir() {
        return Ok(vec![summarize_experiment_dir(dir)?]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("traces").is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::Precondition(format!("{}: no experiment directories found", dir.display())));
    }
    let mut groups = subdirs.iter().map(|d| summarize_experiment_dir(d)).collect::<Result<Vec<_>>>()?;
    groups.sort_by_key(|g| (g.n_agents, g.label.clone()));
    Ok(groups)
}

/// Whether median onset strictly increases with `N` among the groups run
/// with `algorithm`. `None` with fewer than two such groups of known size.
pub fn onset_increases_with_n(groups: &[GroupSummary], algorithm: Algorithm) -> Option<bool> {
    let mut pts: Vec<(usize, f64)> = groups
        .iter()
        .filter(|g| g.algorithm == Some(algorithm))
        .filter_map(|g| Some((g.n_agents?, g.onset?.median)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by_key(|p| p.0);
    Some(pts.windows(2).all(|w| w[1].1 > w[0].1))
}

pub fn render_summary(groups: &[GroupSummary]) -> String {
    let q = |v: Option<Quartiles>, prec: usize| match v {
        Some(q) => format!("{:.p$} [{:.p$}, {:.p$}]", q.median, q.q1, q.q3, p = prec),
        None => "-".to_string(),
    };
    let mut out = format!(
        "{:<24} {:>4} {:>10} {:<32} {:<26} {}\n",
        "config", "N", "plateaued", "final phi  median [q1, q3]", "final grad norm", "onset"
    );
    for g in groups {
        out.push_str(&format!(
            "{:<24} {:>4} {:>10} {:<32} {:<26} {}\n",
            g.label,
            g.n_agents.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            format!("{}/{}", g.plateaued, g.runs),
            q(g.final_phi, 4),
            q(g.final_grad_norm, 4),
            q(g.onset, 0),
        ));
    }
    for alg in [Algorithm::Comm, Algorithm::PayoffOnePoint, Algorithm::PayoffTwoPoint] {
        if let Some(up) = onset_increases_with_n(groups, alg) {
            let name = alg.name();
            let verb = if up { "increases" } else { "does not increase" };
            out.push_str(&format!("{name}: median plateau onset {verb} with N\n"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameCheck {
    pub identity: IdentityReport,
    pub gradient_bound: f64,
    pub lipschitz: f64,
    pub coercivity: CoercivityReport,
}

impl GameCheck {
    pub fn passed(&self) -> bool {
        self.identity.max_analytic_discrepancy <= 1e-10
            && self.identity.max_fd_discrepancy <= 1e-5
            && self.gradient_bound.is_finite()
            && self.coercivity.t0.is_some()
    }
}

impl std::fmt::Display for GameCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "potential identity: max analytic gap {:.3e}, max finite-difference gap {:.3e} over {} points",
            self.identity.max_analytic_discrepancy, self.identity.max_fd_discrepancy, self.identity.samples
        )?;
        writeln!(f, "gradient bound (sampled): {:.6}", self.gradient_bound)?;
        writeln!(f, "gradient Lipschitz constant (sampled): {:.6}", self.lipschitz)?;
        match self.coercivity.t0 {
            Some(t0) => writeln!(
                f,
                "coercive: potential decreasing beyond radius {t0:.2} on {} rays",
                self.coercivity.directions
            )?,
            None => writeln!(f, "coercivity not observed within the scan")?,
        }
        write!(f, "result: {}", if self.passed() { "ok" } else { "FAILED" })
    }
}

/// Sampled assumption checks for the game of the first seed.
pub fn check_game(config: &ExperimentConfig) -> Result<GameCheck> {
    let (game, _) = build_game(&config.game, config.seeds[0])?;
    let g = game.as_ref();
    Ok(GameCheck {
        identity: check_potential_identity(g, 1000, 5.0, 0)?,
        gradient_bound: gradient_bound_probe(g, 2000, 50.0, 0)?,
        lipschitz: lipschitz_probe(g, 2000, 10.0, 0)?,
        coercivity: coercivity_probe(g, 64, 200.0, 400, 0)?,
    })
}
