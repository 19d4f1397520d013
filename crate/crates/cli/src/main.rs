//! Command-line coupling learner driven by JSON experiment configurations.
//!
//! `learn` runs the full pipeline and writes `report.json`; `scan-shots` and
//! `scan-states` write `scan.csv`; `ipr` and `bound` print single diagnostic
//! numbers. Exit codes: 0 success, 2 configuration error, 3 singular or
//! uninformative covariance matrix.

use clap::{Parser, Subcommand};
use hamlearn::analysis::ipr;
use hamlearn::dynamics::DEGENERACY_TOL;
use hamlearn::experiments::{
    load_config, run_learn, scan_shots, scan_states, write_report, ExperimentConfig,
    ExperimentError, Generator, ScanResult,
};
use hamlearn::learner::LearnerError;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Learn the couplings of an unknown few-qubit Hamiltonian from simulated
/// time-dependent state tomography of a single evolving state.
#[derive(Parser)]
#[command(name = "hamlearn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the configuration's master seed.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,
    /// Directory for report.json / scan.csv, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Disable measurement noise regardless of the configuration.
    #[arg(long, global = true)]
    no_noise: bool,
    /// Build the covariance matrix from noiseless snapshots.
    #[arg(long, global = true)]
    exact_tqcm: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json.
    Learn {
        /// Experiment configuration file.
        config: PathBuf,
    },
    /// Grow the snapshot count over one trajectory and write scan.csv.
    ScanShots {
        /// Experiment configuration file with an n_t_schedule.
        config: PathBuf,
    },
    /// Learn from Haar-random probe states at fixed N_T and write scan.csv.
    ScanStates {
        /// Experiment configuration file with a fixed n_t.
        config: PathBuf,
        /// Number of random probe states.
        #[arg(long, value_name = "K")]
        count: usize,
    },
    /// Print the delocalization tr(ρ̄²) of the configured probe state.
    Ipr {
        /// Experiment configuration file.
        config: PathBuf,
    },
    /// Print the closed-form accuracy bound of the configured run.
    Bound {
        /// Experiment configuration file.
        config: PathBuf,
    },
}

/// A failed invocation: message for stderr plus process exit code.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn new(message: impl Into<String>, code: u8) -> Self {
        Failure {
            message: message.into(),
            code,
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(err: ExperimentError) -> Self {
        let code = match &err {
            ExperimentError::Config(_) => 2,
            ExperimentError::Learner(LearnerError::NoInformation) => 3,
            _ => 1,
        };
        Failure::new(err.to_string(), code)
    }
}

impl From<hamlearn::experiments::ConfigError> for Failure {
    fn from(err: hamlearn::experiments::ConfigError) -> Self {
        Failure::new(err.to_string(), 2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("hamlearn: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Learn { config } => learn(&load(config, &cli)?, &cli),
        Command::ScanShots { config } => {
            let config = load(config, &cli)?;
            write_scan(scan_shots(&config)?, &config, &cli)
        }
        Command::ScanStates { config, count } => {
            let config = load(config, &cli)?;
            write_scan(scan_states(&config, *count)?, &config, &cli)
        }
        Command::Ipr { config } => probe_ipr(&load(config, &cli)?),
        Command::Bound { config } => bound(&load(config, &cli)?),
    }
}

/// Read the configuration and apply command-line overrides.
fn load(path: &Path, cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.no_noise {
        config.noise = false;
    }
    if cli.exact_tqcm {
        config.exact_tqcm = true;
    }
    Ok(config)
}

fn out_dir(config: &ExperimentConfig, cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn optional(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".into(), |v| v.to_string())
}

fn learn(config: &ExperimentConfig, cli: &Cli) -> Result<u8, Failure> {
    let outcome = run_learn(config)?;
    let report = &outcome.report;
    if report.degenerate {
        eprintln!(
            "hamlearn: warning: degenerate spectrum; the reported ipr depends on the \
             eigenbasis the solver returned"
        );
    }
    let path = write_report(&outcome, &out_dir(config, cli))?;
    println!("n_t {}", report.n_t);
    println!("rank {} of {}", report.rank, report.h_opt.len());
    println!("epsilon {}", optional(report.epsilon));
    println!("bound {}", optional(report.bound));
    println!("ipr {}", optional(report.ipr));
    println!("report {}", path.display());
    if report.singular {
        eprintln!(
            "hamlearn: warning: singular covariance matrix; couplings are the \
             minimum-norm solution"
        );
        return Ok(3);
    }
    Ok(0)
}

fn write_scan(scan: ScanResult, config: &ExperimentConfig, cli: &Cli) -> Result<u8, Failure> {
    let path = scan.write_csv(&out_dir(config, cli))?;
    println!("rows {}", scan.rows.len());
    println!("scan {}", path.display());
    Ok(0)
}

fn probe_ipr(config: &ExperimentConfig) -> Result<u8, Failure> {
    config.validate()?;
    let generator = config.resolve_generator()?;
    let Generator::Hamiltonian(h) = &generator else {
        return Err(Failure::new(
            "ipr needs a Hamiltonian generator, not a unitary schedule",
            2,
        ));
    };
    let mut rho0 = config.resolve_initial_state(&generator)?;
    if config.depolarization > 0.0 {
        rho0 = rho0
            .depolarize(config.depolarization)
            .map_err(|e| Failure::new(e.to_string(), 1))?;
    }
    if h.is_degenerate(DEGENERACY_TOL) {
        eprintln!(
            "hamlearn: warning: degenerate spectrum; the reported ipr depends on the \
             eigenbasis the solver returned"
        );
    }
    let value = ipr(&rho0, h).map_err(|e| Failure::new(e.to_string(), 1))?;
    println!("{value}");
    Ok(0)
}

fn bound(config: &ExperimentConfig) -> Result<u8, Failure> {
    config.validate()?;
    if matches!(config.resolve_generator()?, Generator::Schedule(_)) {
        return Err(Failure::new(
            "bound needs a Hamiltonian generator, not a unitary schedule",
            2,
        ));
    }
    let outcome = run_learn(config)?;
    match outcome.report.bound {
        Some(value) => {
            println!("{value}");
            Ok(0)
        }
        None => Err(Failure::new(
            "the covariance matrix is singular; the bound diverges",
            3,
        )),
    }
}
