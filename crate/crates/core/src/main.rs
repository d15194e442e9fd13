use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hjkit::cli::{self, Command, Format, ScenarioConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Check,
    Construct,
    Characteristic,
    Integrability,
    Fibration,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

/// Construct and verify complete solutions of Hamilton-Jacobi problems.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Directory for the report and tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Fmt,
}

fn load(args: &Args) -> hjkit::Result<ScenarioConfig> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => cli::lookup(name)
            .map(|s| s.config)
            .ok_or_else(|| hjkit::Error::Config(format!("no built-in scenario `{name}`")))?,
        (None, None) => unreachable!("clap requires one"),
    };
    if let Some(n) = args.probes {
        cfg.probes = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let command = match args.command {
        Cmd::Check => Command::Check,
        Cmd::Construct => Command::Construct,
        Cmd::Characteristic => Command::Characteristic,
        Cmd::Integrability => Command::Integrability,
        Cmd::Fibration => Command::Fibration,
    };
    let format = match args.format {
        Fmt::Csv => Format::Csv,
        Fmt::Json => Format::Json,
    };
    let out = cli::run(command, &cfg);
    println!("{}", out.report.summary());
    if let Some(dir) = &args.out {
        if let Err(e) = cli::write_outputs(dir, &out.report, &out.tables, format) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    ExitCode::from(out.report.exit_code as u8)
}
