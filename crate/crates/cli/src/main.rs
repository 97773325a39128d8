mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CliError, Outcome};
use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "cech-betti", version, about = "Betti numbers of random Čech complexes and their limit theorems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample a Poisson point cloud.
    Sample,
    /// Betti curve, barcode, component census and lifetime sums of a cloud.
    Betti,
    /// Monte Carlo limit constants.
    Constants,
    /// Regime run with its limit-theorem checks.
    Experiment,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Betti => "betti",
            Command::Constants => "constants",
            Command::Experiment => "experiment",
        }
    }
}

fn load(cli: &Cli) -> Result<Config, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config: Config =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    }
    if let Some(seed) = cli.seed {
        if let Some(s) = config.sample.as_mut() {
            s.seed = seed;
        }
        if let Some(g) = config.betti.as_mut().and_then(|b| b.generate.as_mut()) {
            g.seed = seed;
        }
        if let Some(c) = config.constants.as_mut() {
            c.seed = seed;
        }
        if let Some(e) = config.experiment.as_mut() {
            e.seed = seed;
        }
    }
    if config.out.is_none() {
        config.out = Some(PathBuf::from("out"));
    }
    if config.threads.is_none() {
        config.threads = Some(std::thread::available_parallelism().map_or(1, |n| n.get()));
    }
    if config.threads == Some(0) {
        return Err(CliError::Config("threads must be positive".into()));
    }
    Ok(config.resolved())
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = load(cli)?;
    let threads = config.threads.expect("resolved");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Resource(e.to_string()))?;
    let out = config.out.clone().expect("resolved");
    std::fs::create_dir_all(&out).map_err(|e| CliError::Resource(format!("{}: {e}", out.display())))?;
    let mut outcome = pool.install(|| match cli.command {
        Command::Sample => commands::sample(&config, &out),
        Command::Betti => commands::betti(&config, &out),
        Command::Constants => commands::constants(&config, &out),
        Command::Experiment => commands::experiment(&config, &out),
    })?;
    commands::write_manifest(&out, cli.command.name(), &config, &mut outcome)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
