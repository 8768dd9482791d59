use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod inputs;

/// Trace-driven short-video preloading simulator.
#[derive(Parser, Debug)]
#[command(name = "shortvid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retention model commands.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Generate synthetic bandwidth traces.
    Gen(GenArgs),
    /// Generate a synthetic catalog, viewer behavior and session scripts.
    Workload(WorkloadArgs),
    /// Run one session and print its metrics.
    Run(RunArgs),
    /// Run a strategy x scenario comparison matrix and write reports.
    Compare(CompareArgs),
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Build one retention model JSON per category in a behavior CSV.
    Build {
        /// Behavior CSV (`trace_id,category,total_chunks,swipe_chunk`).
        #[arg(long)]
        behavior: PathBuf,
        /// Directory for the model files.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Scenario kind: high, medium, low or mixed.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Trace length in seconds.
    #[arg(long, default_value_t = 900.0)]
    pub duration: f64,
    /// Number of traces; trace `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct WorkloadArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of session scripts.
    #[arg(long)]
    pub script_count: Option<usize>,
    #[arg(long)]
    pub videos_per_script: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inputs shared by `run` and `compare`.
#[derive(Args, Debug, Default)]
pub struct SessionInputs {
    /// JSON config; every field is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config field, e.g. `--set w4=0.8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Session scripts JSON. Without it a synthetic workload is generated
    /// from the seed.
    #[arg(long)]
    pub scripts: Option<PathBuf>,
    /// A model JSON file or a directory of them.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Behavior CSV to build models from.
    #[arg(long)]
    pub behavior: Option<PathBuf>,
    #[arg(long)]
    pub fixb_current: Option<usize>,
    #[arg(long)]
    pub fixb_next: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub inputs: SessionInputs,
    #[arg(long, default_value = "dtaap")]
    pub strategy: String,
    /// Which script to run; defaults to the first.
    #[arg(long)]
    pub script_id: Option<String>,
    /// Bandwidth trace CSV. Without it one is generated from `--scenario`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value = "medium")]
    pub scenario: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 900.0)]
    pub duration: f64,
    /// Write the full session result (timeline and decisions) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Manifest JSON; flags override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: SessionInputs,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<String>,
    /// Comma-separated scenario kinds.
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Directory of trace CSVs named `<scenario>_<anything>.csv`.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Generated traces per scenario and seed.
    #[arg(long)]
    pub trace_count: Option<usize>,
    /// Generated trace length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Synthetic scripts when `--scripts` is absent.
    #[arg(long)]
    pub script_count: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error that points at a bug rather than at bad input.
#[derive(Debug)]
pub struct Internal(pub String);

impl std::fmt::Display for Internal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Internal {}

fn main() -> ExitCode {
    // Usage errors are input errors, so they exit with 1 rather than
    // clap's default of 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Model(ModelCommand::Build { behavior, out }) => commands::model_build(&behavior, &out),
        Command::Gen(args) => commands::gen(&args),
        Command::Workload(args) => commands::workload(&args),
        Command::Run(args) => commands::run(&args),
        Command::Compare(args) => commands::compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Internal>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
