//! Command-line pipeline: dataset generation, projection, filtering,
//! training, evaluation, the toggle-grid ablation, and a built-in oracle
//! selftest. Exit codes: 0 success, 1 usage error, 2 runtime error.
//!
//! Every command is a deterministic function of its flags and config: seeds
//! are explicit, no wall-clock entropy exists anywhere, and each command
//! writes a `manifest.txt` of content hashes next to its artifacts so reruns
//! can be compared byte for byte.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "mmseg",
    version,
    about = "Synthetic multi-modal LiDAR segmentation pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic camera+LiDAR dataset
    GenData {
        /// Output dataset directory
        #[arg(long)]
        out: PathBuf,
        /// Number of scenes to generate
        #[arg(long, default_value_t = 16)]
        scenes: usize,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image width in pixels (even)
        #[arg(long, default_value_t = 96)]
        width: usize,
        /// Image height in pixels (even)
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
    /// Project one sample's point cloud into the 5-channel map
    Project {
        /// Sample directory (cloud.mmtf + camera.txt)
        #[arg(long)]
        sample: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run guided tree filtering on stored tensors
    Filter {
        /// Prediction tensor (N_cls x H x W)
        #[arg(long)]
        pred: PathBuf,
        /// Guide feature tensor (C x H x W)
        #[arg(long)]
        guide: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the two-stream model
    Train(TrainArgs),
    /// Evaluate a trained model: 2D, empty-region and 3D mIoU plus coverage
    Eval {
        /// Model directory produced by `train`
        #[arg(long)]
        model: PathBuf,
        /// Evaluation dataset directory
        #[arg(long)]
        data: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate the 2x2 grid of filter/cross-supervision toggles
    Ablate(AblateArgs),
    /// Run the built-in oracle suites
    Selftest,
}

#[derive(Args)]
struct CommonTrainOpts {
    /// JSON config file; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Cross-supervision loss weight
    #[arg(long)]
    alpha: Option<f64>,
    /// Confidence threshold at the start of training
    #[arg(long)]
    tau_start: Option<f64>,
    /// Confidence threshold at the end of training
    #[arg(long)]
    tau_end: Option<f64>,
    /// Batch size
    #[arg(long)]
    batch_size: Option<usize>,
    /// Disable guided filtering
    #[arg(long)]
    no_filter: bool,
    /// Disable cross pseudo supervision
    #[arg(long)]
    no_dycross: bool,
    /// Guide feature for the filter
    #[arg(long, value_parser = ["cam-low", "cam-image", "cam-high", "lidar-low"])]
    guide: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset directory
    #[arg(long)]
    data: PathBuf,
    /// Output directory for checkpoint, metrics and config
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: CommonTrainOpts,
}

#[derive(Args)]
struct AblateArgs {
    /// Training dataset directory (shared by all variants)
    #[arg(long)]
    data: PathBuf,
    /// Evaluation dataset directory
    #[arg(long)]
    test_data: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Number of seeds in the grid
    #[arg(long)]
    seeds: Option<usize>,
    #[command(flatten)]
    common: CommonTrainOpts,
}

impl CommonTrainOpts {
    /// defaults < config file < explicit flags
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(tau_start) = self.tau_start {
            cfg.tau_start = tau_start;
        }
        if let Some(tau_end) = self.tau_end {
            cfg.tau_end = tau_end;
        }
        if let Some(batch_size) = self.batch_size {
            cfg.batch_size = batch_size;
        }
        if self.no_filter {
            cfg.use_filter = false;
        }
        if self.no_dycross {
            cfg.use_dycross = false;
        }
        if let Some(guide) = &self.guide {
            cfg.guide_source = guide.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            out,
            scenes,
            seed,
            width,
            height,
        } => commands::data::gen_data(&out, scenes, seed, width, height),
        Command::Project { sample, out } => commands::data::project(&sample, &out),
        Command::Filter { pred, guide, out } => commands::data::filter(&pred, &guide, &out),
        Command::Train(args) => {
            let mut cfg = args.common.resolve()?;
            cfg.data_dir = Some(args.data.display().to_string());
            commands::train::run(&cfg, &args.data, &args.out)
        }
        Command::Eval { model, data, out } => commands::evaluate::run(&model, &data, &out),
        Command::Ablate(args) => {
            let mut cfg = args.common.resolve()?;
            if let Some(seeds) = args.seeds {
                cfg.ablate_seeds = seeds;
            }
            cfg.data_dir = Some(args.data.display().to_string());
            commands::ablate::run(&cfg, &args.data, &args.test_data, &args.out)
        }
        Command::Selftest => {
            let results = mmseg_core::selftest::run_all();
            let mut failed = 0;
            for r in &results {
                match &r.outcome {
                    Ok(()) => println!("[PASS] {}", r.name),
                    Err(msg) => {
                        failed += 1;
                        println!("[FAIL] {}: {msg}", r.name);
                    }
                }
            }
            if failed > 0 {
                anyhow::bail!("{failed} of {} suites failed", results.len());
            }
            println!("all {} suites passed", results.len());
            Ok(())
        }
    }
}

/// Parses and runs a command line; returns the process exit code
/// (0 success, 1 usage error, 2 runtime error).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    0
                }
                _ => {
                    eprint!("{err}");
                    1
                }
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}
