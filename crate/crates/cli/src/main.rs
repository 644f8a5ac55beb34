use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use jbsde_cli::{execute, BetaSetting, Command, Overrides, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "jbsde", version, about = "Solve and verify jump BSDEs on exact scenario trees")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out_dir` from the config, else ./jbsde-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// "auto" for β_min(δ) times the configured margin, or a number.
    #[arg(long, global = true)]
    beta: Option<BetaSetting>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Picard stopping tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Picard iteration cross-checked against the backward oracle.
    Solve,
    /// Run every identity and estimate check.
    Verify,
    /// Picard runs over grids of β, δ and step counts.
    Sweep,
    /// Iterate past a violated hypothesis and report the blow-up.
    Counterexample,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_CONFIG);
    };
    let command = match cli.command {
        Sub::Solve => Command::Solve,
        Sub::Verify => Command::Verify,
        Sub::Sweep => Command::Sweep,
        Sub::Counterexample => Command::Counterexample,
    };
    let overrides = Overrides {
        seed: cli.seed,
        beta: cli.beta,
        delta: cli.delta,
        tol: cli.tol,
    };
    let start = Instant::now();
    let code = match execute(command, &config, &overrides, cli.out.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    eprintln!("{} finished in {:.3}s with exit code {code}", command.name(), start.elapsed().as_secs_f64());
    ExitCode::from(code)
}
