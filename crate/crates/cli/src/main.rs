//! Batch experiment driver. One subcommand per experiment type; the
//! experiment itself is described by a JSON config file. Exit codes:
//! 0 = pass, 1 = invariant failure, 2 = usage or config error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use samplemax::config::{Command, ReportFormat};
use samplemax::driver::DriverError;
use samplemax::{parse_config, run_experiment};

#[derive(Parser)]
#[command(
    name = "samplemax",
    version,
    about = "Single-sample prophet inequality experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Cross-validate the closed forms against brute-force enumeration on
    /// random draw tables
    Verify(RunArgs),
    /// Monte Carlo run of the max-sample threshold rule
    Simulate(RunArgs),
    /// Posted-price mechanism ratio experiments
    Mechanism(RunArgs),
    /// Exact gap measurements on the named hard instances
    Counterexample(RunArgs),
}

impl CliCommand {
    fn expected(&self) -> Command {
        match self {
            CliCommand::Verify(_) => Command::Verify,
            CliCommand::Simulate(_) => Command::Simulate,
            CliCommand::Mechanism(_) => Command::Mechanism,
            CliCommand::Counterexample(_) => Command::Counterexample,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            CliCommand::Verify(a)
            | CliCommand::Simulate(a)
            | CliCommand::Mechanism(a)
            | CliCommand::Counterexample(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,

    /// Write the report here (overrides the config's output_path;
    /// default is stdout)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format (overrides the config's format)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

const EXIT_PASS: u8 = 0;
const EXIT_INVARIANT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();

    let text = match fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("samplemax: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("samplemax: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let expected = cli.command.expected();
    if config.command != expected {
        eprintln!(
            "samplemax: subcommand {:?} does not match config command {:?}",
            expected.name(),
            config.command.name()
        );
        return ExitCode::from(EXIT_USAGE);
    }

    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(format) = args.format {
        config.format = format.into();
    }

    let output = match run_experiment(&config) {
        Ok(output) => output,
        Err(e) => {
            let kind = match e {
                DriverError::Config(_) => "config error",
                _ => "error",
            };
            eprintln!("samplemax: {kind}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let out_path = args
        .out
        .clone()
        .or_else(|| config.output_path.as_ref().map(PathBuf::from));
    match out_path {
        Some(path) => {
            if let Err(e) = fs::write(&path, output.report.as_bytes()) {
                eprintln!("samplemax: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
            eprintln!(
                "samplemax: {} report written to {} ({})",
                config.command.name(),
                path.display(),
                if output.passed { "pass" } else { "FAIL" }
            );
        }
        None => print!("{}", output.report),
    }

    if output.passed {
        ExitCode::from(EXIT_PASS)
    } else {
        ExitCode::from(EXIT_INVARIANT_FAILURE)
    }
}
