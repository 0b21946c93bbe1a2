//! `star-spectra`: generate star graphs, solve their spectra, evaluate the
//! periodic-orbit series and compare against Monte Carlo ensembles.

mod args;
mod commands;
mod error;
mod output;

use clap::{CommandFactory, Parser};
use std::process::ExitCode;

use crate::args::Cli;

/// Usage line of the deepest subcommand named on the command line.
fn usage_for(args: impl Iterator<Item = String>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    for arg in args {
        match cmd.find_subcommand(&arg) {
            Some(sub) => cmd = sub.clone(),
            None if arg.starts_with('-') => continue,
            None => break,
        }
    }
    cmd.render_usage().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // --help and --version land here too
            if !e.use_stderr() {
                return ExitCode::from(0);
            }
            if !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(std::env::args().skip(1)));
            }
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    match commands::run(&cli, argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
