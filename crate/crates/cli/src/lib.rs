//! Command-line front end for observation-time design searches.

pub mod commands;
pub mod config;
pub mod dispatch;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "obsdesign", version, about = "Bayes-optimal observation-time design search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm on one model.
    Run(RunArgs),
    /// Run several algorithms repeatedly and compare them against a reference optimum.
    Compare(CommonArgs),
    /// Continue a new-algorithm search from a checkpoint.
    Resume(ResumeArgs),
    /// Exact death-model expected utilities and the powering correspondence table.
    Fig3(Fig3Args),
    /// Print the leading designs stored in a checkpoint.
    Top(TopArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, overriding the config.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Stop the new algorithm after this many iterations (resume later).
    #[arg(long)]
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ResumeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Config to continue with; its grid must match the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Steps to add after the configured schedule.
    #[arg(long, default_value_t = 0)]
    pub extra_steps: usize,
    /// Evaluations in each added step; defaults to the last step's budget.
    #[arg(long)]
    pub per_step: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Fig3Args {
    /// Death-model config; the default model is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest power `J` tabulated.
    #[arg(long, default_value_t = 100)]
    pub max_power: u32,
}

#[derive(Debug, Clone, Args)]
pub struct TopArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Number of designs to print.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => commands::run::run(&args),
        Command::Compare(args) => commands::compare::compare(&args),
        Command::Resume(args) => commands::resume::resume(&args),
        Command::Fig3(args) => commands::fig3::fig3(&args),
        Command::Top(args) => commands::top::top(&args),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
