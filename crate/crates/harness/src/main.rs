use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mechnet::oracle::{oracle, OracleParams};
use mechnet::scenario::{ScalarKind, Scenario};
use mechnet::validate::validate;
use mechnet::{report, run_scenario, HarnessError, RunResult};
use mechnet_core::catalog::MechanismKind;
use mechnet_core::{Exact, Real, Scalar};

#[derive(Parser)]
#[command(name = "mechnet", version, about = "Simulate distributed mechanism rounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Mr,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check a scenario file without running it.
    Validate { file: PathBuf },
    /// Evaluate a mechanism on inline types, e.g. `oracle vickrey "1 5 2 3 2"`.
    Oracle {
        mechanism: MechanismKind,
        types: String,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        cost: Option<String>,
        /// Network edge as `label:from:to`; repeatable.
        #[arg(long = "edge")]
        edges: Vec<String>,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        sink: Option<String>,
        /// Use floating point instead of exact fractions.
        #[arg(long)]
        float: bool,
    },
}

fn load(file: &PathBuf) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(file)?;
    Scenario::parse(&text).map_err(|issues| HarnessError::Invalid(issues.iter().map(|i| i.to_string()).collect()))
}

fn emit<S: Scalar>(
    s: &Scenario,
    seed: Option<u64>,
    trace: Option<&PathBuf>,
    format: Format,
) -> Result<i32, HarnessError> {
    let result: RunResult<S> = run_scenario(s, seed)?;
    if let Some(path) = trace {
        let mut lines = result.trace_lines().join("\n");
        lines.push('\n');
        std::fs::write(path, lines)?;
    }
    match format {
        Format::Text => print!("{}", report::text(&result)),
        Format::Mr => print!("{}", report::machine(&result)),
    }
    Ok(result.exit_code())
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run {
            file,
            seed,
            trace,
            format,
        } => {
            let s = load(&file)?;
            let env_seed = std::env::var("MECHNET_SEED")
                .ok()
                .map(|v| v.parse::<u64>())
                .transpose()
                .map_err(|e| HarnessError::Invalid(vec![format!("MECHNET_SEED: {e}")]))?;
            let seed = seed.or(env_seed);
            match s.scalar {
                ScalarKind::Exact => emit::<Exact>(&s, seed, trace.as_ref(), format),
                ScalarKind::Float => emit::<Real>(&s, seed, trace.as_ref(), format),
            }
        }
        Command::Validate { file } => {
            let s = load(&file)?;
            let issues = validate(&s);
            if issues.is_empty() {
                println!("ok: {} players, {} registries", s.players.len(), s.registries.len());
                Ok(0)
            } else {
                Err(HarnessError::Invalid(issues.iter().map(|i| i.to_string()).collect()))
            }
        }
        Command::Oracle {
            mechanism,
            types,
            items,
            cost,
            edges,
            source,
            sink,
            float,
        } => {
            let params = OracleParams {
                items,
                cost,
                edges,
                source,
                sink,
            };
            let out = if float {
                oracle::<Real>(mechanism, &types, &params)
            } else {
                oracle::<Exact>(mechanism, &types, &params)
            }
            .map_err(|e| HarnessError::Invalid(vec![e]))?;
            print!("{out}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
