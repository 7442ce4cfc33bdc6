use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use potential_play::experiment::{
    check_game, output_dir, parse_config_unchecked, render_summary, run_experiment, summarize, ExperimentConfig,
    OUTPUT_ROOT_ENV,
};
use potential_play::graph::{read_schedule, verify_graph_sequence, write_schedule, RandomSConnected};
use potential_play::schedules::{validate_comm_schedule, validate_payoff_schedules, ScheduleSpec, Target};
use potential_play::Error;

#[derive(Parser)]
#[command(name = "potential-play", version, about = "Distributed learning in continuous-action potential games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Comm,
    Payoff,
    TwoPoint,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write traces and summaries.
    Run {
        config: PathBuf,
        /// Run even if the schedules fail admissibility checks.
        #[arg(long)]
        force: bool,
        /// Output directory (overrides the config and the output root).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check power-law schedule exponents against the convergence conditions.
    ValidateSchedule {
        /// Step-size exponent.
        #[arg(long)]
        p: f64,
        /// Variance exponent (payoff modes).
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, value_enum, default_value_t = Mode::Payoff)]
        mode: Mode,
    },
    /// Sampled checks of the potential identity, smoothness and coercivity.
    CheckGame { config: PathBuf },
    /// Write a random S-strongly connected graph schedule.
    GenGraphs {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        window: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify S-strong connectivity of a graph schedule file.
    VerifyGraphs {
        file: PathBuf,
        /// Window to check; defaults to the file's `# window` header.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Aggregate the traces of one or more experiment directories.
    Summarize { dir: PathBuf },
}

// Writes to stdout, tolerating a closed pipe (`| head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(io::stdout(), $($arg)*);
    }};
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Rejected,
}

fn execute(cmd: Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Run { config, force, output } => {
            let mut cfg = load_config_with(&config, force)?;
            if output.is_some() {
                cfg.output = output;
            }
            let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
            let dir = output_dir(&cfg, root.as_deref());
            let runs = run_experiment(&cfg, &dir)?;
            let plateaued = runs.iter().filter(|r| r.plateaued).count();
            out!("{}: {} runs, {plateaued} plateaued, output in {}", cfg.name, runs.len(), dir.display());
            for r in &runs {
                out!(
                    "  seed {:>4}  phi {:>12.6}  grad {:>10.3e}  plateau {}",
                    r.seed,
                    r.final_phi,
                    r.final_grad_norm,
                    match r.plateau_onset {
                        Some(t) => format!("from t = {t}"),
                        None if r.diverged => "diverged".to_string(),
                        None => "no".to_string(),
                    }
                );
            }
            Ok(Outcome::Ok)
        }
        Command::ValidateSchedule { p, q, mode } => {
            let gamma = ScheduleSpec::new(1.0, p).map_err(|e| Error::Config(e.to_string()))?;
            let report = match mode {
                Mode::Comm => validate_comm_schedule(&gamma),
                Mode::Payoff | Mode::TwoPoint => {
                    let sigma = ScheduleSpec::new(1.0, q)?;
                    let target = if matches!(mode, Mode::TwoPoint) { Target::TwoPoint } else { Target::OnePoint };
                    validate_payoff_schedules(&gamma, &sigma, target)
                }
            };
            out!("{report}");
            Ok(if report.admissible() { Outcome::Ok } else { Outcome::Rejected })
        }
        Command::CheckGame { config } => {
            let cfg = load_config_with(&config, true)?;
            let check = check_game(&cfg)?;
            out!("{check}");
            Ok(if check.passed() { Outcome::Ok } else { Outcome::Rejected })
        }
        Command::GenGraphs { n, window, density, seed, horizon, out } => {
            let sched = RandomSConnected::new(n, window, density, seed)?;
            match out {
                Some(path) => write_schedule(&sched, horizon, io::BufWriter::new(fs::File::create(path)?))?,
                None => write_schedule(&sched, horizon, io::stdout().lock())?,
            }
            Ok(Outcome::Ok)
        }
        Command::VerifyGraphs { file, window } => {
            let parsed = read_schedule(BufReader::new(fs::File::open(&file)?))?;
            let s = window.or(parsed.window).ok_or_else(|| {
                Error::Config("no window given and the file has no `# window` header".into())
            })?;
            let report = verify_graph_sequence(&parsed.graphs, s)?;
            match report.first_violation {
                None => {
                    out!(
                        "{}: {} graphs on {} nodes, all {} windows of length {s} strongly connected",
                        file.display(),
                        report.horizon,
                        parsed.n_nodes,
                        report.windows_checked
                    );
                    Ok(Outcome::Ok)
                }
                Some(t) => {
                    out!("{}: window [{t}, {}) is not strongly connected", file.display(), t + s);
                    Ok(Outcome::Rejected)
                }
            }
        }
        Command::Summarize { dir } => {
            let _ = write!(io::stdout(), "{}", render_summary(&summarize(&dir)?));
            Ok(Outcome::Ok)
        }
    }
}

fn load_config_with(path: &Path, force: bool) -> Result<ExperimentConfig, Error> {
    let mut cfg = parse_config_unchecked(&fs::read_to_string(path)?)?;
    cfg.force |= force;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(1),
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
