use std::process::ExitCode;

use clap::Parser;
use eigenlab::config::{Command, FileConfig, Overrides};
use eigenlab::{run_command, CliError, ExperimentSpec};

/// Experiments on the eigenvalue particle system.
#[derive(Debug, Parser)]
#[command(name = "eigenlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let spec = ExperimentSpec::build(cli.command, file, &cli.flags)?;
    println!("# {}", spec.describe());
    for path in run_command(&spec, &mut |line| println!("{line}"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eigenlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
