use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use sburgers::experiment::{parse_config, run, Command, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    Ensemble,
    SweepNu,
    OracleCompare,
    Convergence,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Ensemble => Command::Ensemble,
            Sub::SweepNu => Command::SweepNu,
            Sub::OracleCompare => Command::OracleCompare,
            Sub::Convergence => Command::Convergence,
        }
    }
}

/// Stochastic Burgers experiments on the torus.
#[derive(Debug, Parser)]
#[command(name = "sburgers", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let record = serde_json::json!({ "status": "error", "kind": kind, "message": message });
    eprintln!("{record}");
    ExitCode::from(if kind == "config" { 2 } else { 1 })
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("SBURGERS_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| format!("SBURGERS_THREADS must be a positive integer (got `{v}`)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail("io", &format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail("config", &e.to_string()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let threads = match threads() {
        Ok(t) => t,
        Err(e) => return fail("config", &e),
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    match run(cli.command.into(), &cfg, &out, threads) {
        Ok(manifest) => {
            let status = manifest.summary_value("status").unwrap_or("completed");
            println!("{} {} -> {}", manifest.command, status, out.display());
            ExitCode::SUCCESS
        }
        Err(e @ RunError::Config(_)) => fail("config", &e.to_string()),
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
