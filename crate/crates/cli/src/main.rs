use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conhist_cli::scenario::ToleranceOverrides;
use conhist_cli::workspace::Workspace;
use conhist_cli::{find_demo, list_demos, parse_syntax, run, CliError, RunOptions, Scenario};

/// Consistent-histories scenarios: check, run and built-in demos.
#[derive(Debug, Parser)]
#[command(name = "conhist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit one JSON record per query instead of tables.
    #[arg(long, global = true)]
    machine: bool,

    /// Override a tolerance: alg, norm, consistency, floor or prob.
    #[arg(long = "tolerance", value_name = "NAME=VALUE", global = true)]
    tolerances: Vec<String>,

    /// Seed for sample queries that do not set one.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a scenario without running it.
    Check { file: PathBuf },
    /// Run every query in a scenario.
    Run { file: PathBuf },
    /// Run a built-in scenario.
    Demo { name: String },
    /// List the built-in scenarios.
    Demos,
}

fn parse_overrides(items: &[String]) -> Result<ToleranceOverrides, CliError> {
    let mut o = ToleranceOverrides::default();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tolerance expects NAME=VALUE, got {item:?}")))?;
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| CliError::Usage(format!("invalid tolerance value {value:?}")))?;
        let slot = match name {
            "alg" => &mut o.alg,
            "norm" => &mut o.norm,
            "consistency" => &mut o.consistency,
            "floor" => &mut o.floor,
            "prob" => &mut o.prob,
            other => return Err(CliError::Usage(format!("unknown tolerance {other:?}"))),
        };
        *slot = Some(value);
    }
    Ok(o)
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_syntax(&text)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let options = RunOptions {
        tolerances: parse_overrides(&cli.tolerances)?,
        seed: cli.seed,
    };
    let scenario = match &cli.command {
        Command::Demos => {
            let text: String = list_demos().map(|(n, s)| format!("{n:<24}{s}\n")).collect();
            emit(cli, &text)?;
            return Ok(0);
        }
        Command::Check { file } => {
            let scenario = load(file)?;
            let ws = Workspace::build(&scenario, &options.tolerances)?;
            emit(cli, &format!("{}: ok, {} queries\n", scenario.name, ws.queries.len()))?;
            return Ok(0);
        }
        Command::Run { file } => load(file)?,
        Command::Demo { name } => {
            let demo = find_demo(name).ok_or_else(|| {
                let names: Vec<_> = list_demos().map(|(n, _)| n).collect();
                CliError::Usage(format!("unknown demo {name:?}; available: {}", names.join(", ")))
            })?;
            parse_syntax(demo.source)?
        }
    };
    let report = run(&scenario, &options)?;
    let text = if cli.machine { report.machine() } else { report.human() };
    emit(cli, &text)?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("conhist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
