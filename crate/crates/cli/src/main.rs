mod args;
mod config;
mod error;
mod repro;
mod run;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::CliError;

const DEFAULT_OUT: &str = "mixcorr-out";

fn configs(cli: &Cli) -> Result<Vec<RunConfig>, CliError> {
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let format = cli.format.unwrap_or_default();
    let single = |job| Ok(vec![RunConfig::new(out.clone(), format, cli.workers, job)]);
    match &cli.command {
        Command::G2(a) => single(a.job()?),
        Command::G2Terms(a) => single(a.job()?),
        Command::G3(a) => single(a.job()?),
        Command::Gn0(a) => single(a.job()?),
        Command::Sweep(a) => single(a.job()?),
        Command::Simulate(a) => single(a.job(cli.seed.unwrap_or(0))?),
        Command::Correlate(a) => single(a.job()?),
        Command::Repro(a) => repro::plan(&out, format, cli.workers, a.quick),
        Command::Rerun(a) => {
            let mut config = RunConfig::load(&a.config)?;
            if let Some(out) = &cli.out {
                config.out = out.clone();
            }
            if cli.workers.is_some() {
                config.workers = cli.workers;
            }
            if cli.format.is_some() || cli.seed.is_some() {
                return Err(CliError::Usage(
                    "rerun replays the stored format and seed; only --out and --workers may change"
                        .into(),
                ));
            }
            Ok(vec![config])
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let configs = configs(cli)?;
    if let Some(n) = configs.first().and_then(|c| c.workers) {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    for config in &configs {
        let report = run::execute(config)?;
        println!("{}: {}", config.out.display(), report.summary);
        for file in &report.files {
            println!("  {}", file.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
