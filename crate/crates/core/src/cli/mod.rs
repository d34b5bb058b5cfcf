//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for bad input (unparsable or invalid
//! configuration, missing files, bad flags) and 2 when a well-formed job fails
//! while running.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::EsflError;

pub use commands::{cmd_converge, cmd_optimize, cmd_simulate, cmd_train_toy, simulate_with_config, CommandOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "esfl",
    version,
    about = "Latency simulator and scheduler for split federated learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo rounds comparing ESFL with the FL, SL and SFL baselines.
    Simulate(SimulateArgs),
    /// One optimizer run on an explicit user list.
    Optimize(OptimizeArgs),
    /// Optimizer iteration counts across population scales.
    Converge(ConvergeArgs),
    /// Split federated training of a small dense network on synthetic data.
    TrainToy(TrainToyArgs),
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, env = "ESFL_OUTPUT_DIR", default_value = "esfl-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Architecture and unit overrides.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Builtin profile (vgg13, vgg16, vgg19) or path to a profile document.
    #[arg(long)]
    pub arch: Option<String>,
    /// Backward-pass FLOPs as a multiple of forward FLOPs.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub bytes_per_element: Option<f64>,
    /// Aggregation time per round, seconds.
    #[arg(long)]
    pub t_agg: Option<f64>,
    /// Bytes per KB: binary (1024) or decimal (1000).
    #[arg(long, value_parser = ["binary", "decimal"])]
    pub kb: Option<String>,
    /// Mini-batch size for the memory estimate.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Preset scenario name (BP, PR, RP, BR, SH, SL, LS, LH).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated algorithms out of esfl, fl, sl, sfl.
    #[arg(long, value_delimiter = ',')]
    pub algos: Option<Vec<String>>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Shared cut layer of the SFL and SL baselines.
    #[arg(long)]
    pub fixed_cut: Option<usize>,
    /// Keep each user's resources fixed for the whole run.
    #[arg(long)]
    pub sticky: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Server budget in TFLOPs.
    #[arg(long)]
    pub server_tflops: Option<f64>,
    /// Also run the exhaustive search and report the gap.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Option<Vec<String>>,
    /// Comma-separated population sizes.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Aggregation step.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated cut layer per user.
    #[arg(long, value_delimiter = ',')]
    pub cuts: Option<Vec<usize>>,
    /// Compare split and monolithic updates and report the largest deviation.
    #[arg(long)]
    pub check_equivalence: bool,
}

/// Runs a parsed command, writing its reports and echoing the text report to
/// stdout.
pub fn run(cli: Cli) -> crate::Result<CommandOutput> {
    let (out_dir, output) = match cli.command {
        Command::Simulate(a) => (a.common.out.clone(), cmd_simulate(&a)?),
        Command::Optimize(a) => (a.common.out.clone(), cmd_optimize(&a)?),
        Command::Converge(a) => (a.common.out.clone(), cmd_converge(&a)?),
        Command::TrainToy(a) => (a.common.out.clone(), cmd_train_toy(&a)?),
    };
    output.write_to(&out_dir)?;
    Ok(output)
}

fn exit_code(err: &EsflError) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_RUNTIME
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(output) => {
            print!("{}", output.stdout);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
