use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use robust_risk_cli::run::EXIT_VALIDATION;
use robust_risk_cli::{parse_config, parse_override, run, validate, Command, RunConfig, Severity};

#[derive(Parser)]
#[command(name = "robust-risk", version, about = "Distributionally robust risk measures from composite divergences")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Config file of `key = value` lines with optional `[section]` headers.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path; the manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a config key, e.g. `--set radius=0.1`. Repeatable.
    #[arg(long = "set", global = true, value_parser = parse_override)]
    overrides: Vec<(String, String)>,
    /// Only validate the configuration.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Nominal OCE and shortfall of a sample or model.
    Evaluate,
    /// Solve a robust dual problem.
    Solve,
    /// Finiteness verdicts: the full tables, or one triple.
    Classify {
        #[arg(default_value = "table")]
        target: String,
    },
    /// Recover composite conjugates from small-probability lotteries.
    Elicit,
    /// Run one of the numerical studies.
    Experiment { target: Experiment },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Toy,
    Compare,
    Hedging,
    Newsvendor,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Toy => "toy",
            Experiment::Compare => "compare",
            Experiment::Hedging => "hedging",
            Experiment::Newsvendor => "newsvendor",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, target) = match &cli.command {
        Cmd::Evaluate => (Command::Evaluate, None),
        Cmd::Solve => (Command::Solve, None),
        Cmd::Classify { target } => (Command::Classify, Some(target.clone())),
        Cmd::Elicit => (Command::Elicit, None),
        Cmd::Experiment { target } => (Command::Experiment, Some(target.name().to_string())),
    };
    let mut params = BTreeMap::new();
    if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        };
        match parse_config(&text) {
            Ok(m) => params = m,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        }
    }
    params.extend(cli.overrides.iter().cloned());
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    }
    let cfg = RunConfig { command, target, params, seed: cli.seed, output_path: cli.out };
    if cli.check {
        let diags = validate(&cfg);
        for d in &diags {
            eprintln!("{d}");
        }
        let failed = diags.iter().any(|d| d.severity == Severity::Error);
        return if failed { ExitCode::from(EXIT_VALIDATION as u8) } else { ExitCode::SUCCESS };
    }
    match run(&cfg) {
        Ok(out) => {
            for d in &out.manifest.diagnostics {
                eprintln!("{d}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code as u8)
        }
    }
}
