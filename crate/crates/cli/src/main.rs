mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use output::{unix_now, RunManifest};

fn run() -> Result<bool> {
    let argv = config::expand(std::env::args_os().collect(), &Command::NAMES)?;
    let cli = Cli::parse_from(argv);
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    let started = unix_now();
    let seed = cli.common.seed;
    let mut snapshot = config::snapshot(&[&cli.common])?;
    let outcome = match &cli.command {
        Command::Theory(a) => {
            snapshot.extend(config::snapshot(&[a])?);
            commands::theory(a)?
        }
        Command::Simulate(a) => {
            snapshot.extend(config::snapshot(&[a])?);
            commands::simulate(a, seed)?
        }
        Command::Compare(a) => {
            snapshot.extend(config::snapshot(&[a])?);
            commands::compare(a, seed)?
        }
        Command::Coverage(a) => {
            snapshot.extend(config::snapshot(&[a])?);
            commands::coverage(a, seed)?
        }
        Command::Replicate(a) => {
            snapshot.extend(config::snapshot(&[a])?);
            commands::replicate(a, seed)?
        }
    };
    let manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        config: snapshot.into_iter().collect(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started,
        finished_unix_s: started,
        outputs: Vec::new(),
    };
    for path in output::write_all(&cli.common.out_dir, &outcome.tables, manifest)? {
        println!("{}", path.display());
    }
    Ok(outcome.complete)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some points did not converge; see warnings above");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
