use std::path::PathBuf;
use std::process::ExitCode;

use beamcorr::config::{Command, RunConfig, StrategyName};
use beamcorr::runner;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Monte Carlo correction factors for directional beamforming over
/// multipath channels.
#[derive(Parser, Debug)]
#[command(name = "beamcorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Estimate the correction factor and compare with closed forms.
    Upsilon(Common),
    /// Effective antenna gain distributions for LOS and NLOS links.
    Gains(Common),
    /// Cross-term check and correction factor for interfering links.
    Interference(Common),
    /// Association crossover and SINR coverage with and without correction.
    Sinr(Common),
    /// Run the property suite; exits nonzero if any check fails.
    Validate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration. Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    /// Existing directory for CSV output.
    #[arg(short, long, env = "BEAMCORR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    PerPath,
    Grid,
    Alternating,
}

impl From<Strategy> for StrategyName {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::PerPath => StrategyName::PerPath,
            Strategy::Grid => StrategyName::Grid,
            Strategy::Alternating => StrategyName::Alternating,
        }
    }
}

fn build(command: Command, args: &Common) -> beamcorr::Result<(RunConfig, PathBuf)> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.run.command = command;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.run.trials = trials;
    }
    if let Some(workers) = args.workers {
        config.run.workers = workers;
    }
    if let Some(strategy) = args.strategy {
        config.run.strategy = strategy.into();
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Upsilon(a) => (Command::Upsilon, a),
        Cmd::Gains(a) => (Command::Gains, a),
        Cmd::Interference(a) => (Command::Interference, a),
        Cmd::Sinr(a) => (Command::Sinr, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };
    let result = build(command, args).and_then(|(config, out)| runner::run(&config, &out));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
