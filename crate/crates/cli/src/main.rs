//! `facebench`: run face detectors on images and benchmark them.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use facebench_core::bench::Resolution;
use facebench_core::detectors::Algorithm;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "facebench", version, about = "Face detectors and a latency benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model directory; defaults to $FD_MODELS_DIR, then the bundled models.
    #[arg(long)]
    pub models: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SuiteArgs {
    /// JSON suite file with bench settings and scenes.
    #[arg(long)]
    pub config: PathBuf,
    /// Restrict to these algorithms (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub algos: Vec<Algorithm>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub duration_ms: Option<u64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub models: ModelArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect faces in one image.
    Detect {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        input: PathBuf,
        /// Resize to WxH before detection; boxes are reported in input pixels.
        #[arg(long)]
        size: Option<Resolution>,
        /// Write the detections here instead of standard output.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Time detectors on a scene suite: samples.csv, stats.csv, boxplot.csv.
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long)]
        resolution: Option<Resolution>,
    },
    /// Time detectors across resolutions.
    Sweep {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Defaults to the suite's `resolutions`.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<Resolution>,
    },
    /// Score detectors 0-3 on the suite's scenes: scores.csv.
    Score {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Defaults to the suite's `resolutions`, else its `resolution`.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<Resolution>,
    },
    /// Per-algorithm speedup of run B over run A: speedup.csv.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Mean column read from A.
        #[arg(long, default_value = "mean_ms")]
        column_a: String,
        /// Mean column read from B.
        #[arg(long, default_value = "mean_ms")]
        column_b: String,
        #[arg(long, default_value = "speedup.csv")]
        out: PathBuf,
    },
    /// Print model metadata.
    Info {
        /// Defaults to every algorithm whose models are present.
        #[arg(long)]
        algo: Option<Algorithm>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Train the HOG face model from face crops and face-free images.
    TrainHog {
        #[arg(long)]
        positives: PathBuf,
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        mining_rounds: usize,
        #[arg(long, default_value_t = 40)]
        crops_per_negative: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Detect { algo, input, size, json, models } => {
            commands::detect(algo, &input, size, json.as_deref(), &models)
        }
        Command::Bench { suite, resolution } => commands::bench(&suite, resolution),
        Command::Sweep { suite, resolutions } => commands::sweep(&suite, &resolutions),
        Command::Score { suite, resolutions } => commands::score(&suite, &resolutions),
        Command::Compare { a, b, column_a, column_b, out } => {
            commands::compare(&a, &b, &column_a, &column_b, &out)
        }
        Command::Info { algo, models } => commands::info(algo, &models),
        Command::TrainHog {
            positives,
            negatives,
            out,
            epochs,
            lambda,
            seed,
            mining_rounds,
            crops_per_negative,
        } => commands::train_hog(
            &positives,
            &negatives,
            &out,
            facebench_core::hog::HogTrainOptions {
                epochs,
                lambda,
                seed,
                mining_rounds,
                crops_per_negative,
                ..Default::default()
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("error: bad arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
