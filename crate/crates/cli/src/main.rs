mod args;
mod commands;
mod error;
mod output;

use args::Cli;
use clap::Parser;
use error::CliError;
use std::io::Write;
use std::process::ExitCode;

const USAGE_EXIT: u8 = 64;

fn run(cli: &Cli) -> Result<(), CliError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(error::invalid(format!("--tol must be positive, got {}", cli.tol)));
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads as usize).build_global()?;
    }
    let ctx = commands::Ctx { seed: cli.seed, dry_run: cli.dry_run, tol: cli.tol };
    let report = commands::dispatch(&cli.command, ctx)?;
    let text = output::render(&report, cli.format)?;
    match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Write { path: path.clone(), source })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|source| CliError::Write { path: "<stdout>".into(), source })?;
        }
    }
    match report.failure {
        Some(why) => Err(CliError::Failed(why)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rhomix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
