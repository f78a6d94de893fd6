//! The `captree` command line: build-tree, eval, perturb and analyze.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use config::{ConfigArgs, ConfigFile, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "captree",
    version,
    about = "Caption trees with hard negatives, evaluation and interpretability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse captions into trees of positive sub-captions with negatives.
    BuildTree(commands::build::BuildArgs),
    /// Score every tree level against its image.
    Eval(commands::eval::EvalArgs),
    /// Accuracy under relevancy-guided token removal.
    Perturb(commands::perturb::PerturbArgs),
    /// Failure tables by part of speech and by word pair.
    Analyze(commands::analyze::AnalyzeArgs),
}

impl Command {
    pub fn run(&self) -> Result<(), CliError> {
        match self {
            Command::BuildTree(args) => commands::build::run(args),
            Command::Eval(args) => commands::eval::run(args),
            Command::Perturb(args) => commands::perturb::run(args),
            Command::Analyze(args) => commands::analyze::run(args),
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match cli.command.run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
