use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semigabor_cli::config::{self, parse_tol_override, Overrides};
use semigabor_cli::{run, CliError, Command};

/// Gabor transforms on semi-direct product groups.
#[derive(Parser)]
#[command(name = "semigabor", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Evaluation mode for the dagger transforms: oracle or interp.
    #[arg(long, global = true)]
    mode: Option<String>,

    /// Tolerance override, e.g. `--tol plancherel=5e-3`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,

    /// Seed for random samples and the `random` signal preset.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the invariant suite and write verify.json.
    Verify,
    /// Write the transform field (field.gtf), magnitude slices and analyze.json.
    Analyze,
    /// Invert a stored field and write synthesized.csv.
    Synthesize {
        #[arg(long)]
        field: PathBuf,
    },
    /// Compare the field against direct quadrature at seeded random nodes.
    OracleCompare,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let overrides = Overrides {
        out: cli.out,
        mode: cli.mode,
        tolerances: cli.tol.iter().map(|t| parse_tol_override(t)).collect::<Result<_, _>>()?,
        seed: cli.seed,
    };
    let cfg = config::load(&path, &overrides)?;
    let command = match cli.command {
        Cmd::Verify => Command::Verify,
        Cmd::Analyze => Command::Analyze,
        Cmd::Synthesize { field } => Command::Synthesize { field },
        Cmd::OracleCompare => Command::OracleCompare,
    };
    let report = run(&command, &cfg)?;
    for c in &report.checks {
        println!("{} {} = {:e} (expected {:e}, tolerance {:e})", if c.pass { "PASS" } else { "FAIL" }, c.check_name, c.value, c.expected, c.tolerance);
    }
    println!("overall: {}", if report.overall_pass { "PASS" } else { "FAIL" });
    Ok(report.overall_pass)
}
