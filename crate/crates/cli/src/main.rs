//! `sck`: solve, simulate and verify band-control problems from a TOML config.

mod commands;
mod config;
mod error;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;
use report::{Report, Status};

#[derive(Debug, Parser)]
#[command(
    name = "sck",
    version,
    about = "Singular control band solver and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, env = "SCK_CONFIG", global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "SCK_OUT", global = true)]
    out: Option<String>,

    #[arg(long, env = "SCK_SEED", global = true)]
    seed: Option<u64>,

    /// Number of simulated paths.
    #[arg(long, env = "SCK_PATHS", global = true)]
    paths: Option<usize>,

    /// Simulation time step.
    #[arg(long, env = "SCK_DT", global = true)]
    dt: Option<f64>,

    /// Nodes of the 1-D finite-difference grid.
    #[arg(long, env = "SCK_GRID", global = true)]
    grid: Option<usize>,

    /// Threshold and policy-iteration tolerance.
    #[arg(long, env = "SCK_TOL", global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Thresholds, value grid and HJB diagnostics.
    Solve,
    /// Monte Carlo cost of the band policy against the analytic value.
    Simulate,
    /// Nash and Pareto bands of a two-player game on shared noise.
    Compare,
    /// Finite-difference solutions against the closed form over refined grids.
    Verify,
    /// Thresholds over the `[sweep]` values.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("no config given (use --config or SCK_CONFIG)".into()))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    cfg.apply(&Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        paths: cli.paths,
        dt: cli.dt,
        grid: cli.grid,
        tol: cli.tol,
    })?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let cfg = load(cli)?;
    let out = Path::new(&cfg.out);
    fs::create_dir_all(out)?;
    // The resolved config, ready to rerun with.
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let report = match cli.command {
        Command::Solve => commands::solve(&cfg, out)?,
        Command::Simulate => commands::simulate(&cfg, out)?,
        Command::Compare => commands::compare(&cfg, out)?,
        Command::Verify => commands::verify(&cfg, out)?,
        Command::Sweep => commands::sweep(&cfg, out)?,
    };
    report.write(out)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for c in &report.checks {
                let tag = match c.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Skipped => "skip",
                };
                let value = match &c.value {
                    toml::Value::Float(v) => format!("{v:.6e}"),
                    other => other.to_string(),
                };
                println!("{tag} {}: {value} (limit {:e})", c.name, c.limit);
            }
            let status = if report.passed() {
                "ok"
            } else {
                "checks failed"
            };
            println!("{}: {status}", cli.command.name());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("sck {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
