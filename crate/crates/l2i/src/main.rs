use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l2i::commands::{cmd_ablate, cmd_checkgrad, cmd_train, RunOptions};

/// Learning-to-impute semi-supervised training on toy and CSV data.
///
/// Progress goes to standard error (set L2I_LOG to quiet, info or debug);
/// paths of written files go to standard output.
#[derive(Parser)]
#[command(name = "l2i", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (`experiment.out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this single seed (`experiment.seeds`).
    #[arg(long)]
    seed: Option<u64>,
    /// Training steps (`experiment.steps`).
    #[arg(long)]
    steps: Option<usize>,
    /// Seeds trained concurrently (`experiment.threads`).
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config key, e.g. `--set l2i.grad_mode=approx`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl From<Common> for RunOptions {
    fn from(c: Common) -> Self {
        RunOptions { config: c.config, out: c.out, seed: c.seed, steps: c.steps, threads: c.threads, set: c.set }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write metrics and a summary.
    Train(Common),
    /// Compare hypergradients with finite differences and closed forms.
    Checkgrad {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per check.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Replace every check's pass threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train paired arms along one axis and write a comparison table.
    Ablate {
        /// grad_mode, label_mode, holdout or holdout_batch.
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis instead of the defaults.
        #[arg(long)]
        values: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn init_logging() {
    let level = match std::env::var("L2I_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Info,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| writeln!(buf, "[{}] {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Train(c) => cmd_train(&c.into(), &mut stdout),
        Command::Checkgrad { seed, instances, threshold } => cmd_checkgrad(seed, instances, threshold, &mut stdout),
        Command::Ablate { axis, values, common } => cmd_ablate(&common.into(), &axis, values.as_deref(), &mut stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
