//! `fdeorbit`: equilibria, Hopf points and periodic-orbit branches of the
//! built-in delay equations, driven by a JSON config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver { stage: &'static str, message: String },
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver { .. } => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Solver { stage, message } => write!(f, "{stage} failed: {message}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Estimate Lipschitz constants and recommend a harmonic count.
    Diagnose,
    /// Solve for steady states.
    Equilibria,
    /// Scan a parameter interval for Hopf points.
    Hopf,
    /// Continue the periodic-orbit branch born at a Hopf point.
    Continue,
    /// Check one orbit against both formulations and a direct simulation.
    Verify,
}

#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "info")]
    log: LogLevel,
    /// Worker threads for Jacobian columns and scan grids.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let mut cfg = config::load(path)?;
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        cfg.solver.parallel = t > 1;
        // Fails only when a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Io(format!("{}: {e}", cli.out.display())))?;
    log::info!("{:?} on {} with N = {}", cli.command, cfg.problem.name, cfg.solver.n_harmonics);
    match cli.command {
        Command::Diagnose => commands::diagnose_cmd(&cfg, &cli.out),
        Command::Equilibria => commands::equilibria(&cfg, &cli.out),
        Command::Hopf => commands::hopf(&cfg, &cli.out),
        Command::Continue => commands::continue_cmd(&cfg, &cli.out),
        Command::Verify => commands::verify(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.log {
        LogLevel::Quiet => log::LevelFilter::Off,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
