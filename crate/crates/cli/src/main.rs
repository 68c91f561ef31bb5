mod commands;
mod config;
mod input;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use fixlab::clustering::Method;
use fixlab::losses::LossKind;

/// Sparse-fixation saliency toolkit.
#[derive(Debug, Parser)]
#[command(name = "fixlab", version)]
struct Cli {
    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Flat `key=value` file overriding option defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Resize inputs so their shorter side has this many pixels.
    #[arg(long, global = true, value_name = "PIXELS")]
    resize_short: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
struct SeedArg {
    #[arg(long, env = "FIXLAB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster fixation maps into weighted sparse centers (JSON).
    Sparsify(SparsifyArgs),
    /// Render a Gaussian blob map from a fixation map.
    Blur(BlurArgs),
    /// Score predicted saliency maps against ground truth (CSV).
    Eval(EvalArgs),
    /// Finite-difference check of a loss gradient (JSON).
    Losscheck(LosscheckArgs),
    /// Metric curve of a blob map round-tripped through each downsample factor (CSV).
    DownsampleStudy(DownsampleArgs),
    /// Preservation sweep of every clustering method over cluster counts (CSV).
    ClusterCompare(ClusterCompareArgs),
    /// Train the toy readout on synthetic scenes (trace CSV, model JSON).
    TrainToy(TrainToyArgs),
}

#[derive(Debug, Args)]
struct SparsifyArgs {
    /// Fixation map file, directory of maps, or dataset root.
    input: PathBuf,
    #[arg(long, default_value_t = Method::Ward)]
    method: Method,
    #[arg(long, default_value_t = fixlab::clustering::DEFAULT_K)]
    k: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Pixels brighter than this are fixations.
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Output file for a single map, or output directory for a batch.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlurArgs {
    /// Fixation map file.
    input: PathBuf,
    /// Blur width in pixels (default: 19 scaled to the image height over 480).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Output raster (.pgm or .png), stretched so the maximum is 255.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory of predicted saliency maps.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth blob maps.
    #[arg(long)]
    gt_blobs: PathBuf,
    /// Directory of ground-truth fixation maps.
    #[arg(long)]
    gt_pixels: PathBuf,
    /// Fixation maps of other images, used as sAUC negatives.
    #[arg(long)]
    shuffled_pool: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Random negative sets drawn by AUC-Borji and sAUC.
    #[arg(long, default_value_t = fixlab::metrics::DEFAULT_SPLITS)]
    splits: usize,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_EPS)]
    eps: f64,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LosscheckArgs {
    #[arg(long, default_value_t = LossKind::PoolingKld)]
    loss: LossKind,
    #[arg(long, default_value_t = fixlab::losses::DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Side length of the random square instance.
    #[arg(long, default_value_t = 6)]
    size: usize,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_EPS)]
    eps: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = fixlab::losses::DEFAULT_FD_STEP)]
    step: f64,
}

#[derive(Debug, Args)]
struct DownsampleArgs {
    /// Fixation map file.
    pixels: PathBuf,
    /// Blob map matching the fixation map (default: blur the fixations).
    #[arg(long)]
    blob: Option<PathBuf>,
    /// Blur width used when no blob map is given.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = fixlab::resampling::DEFAULT_FACTORS)]
    factors: Vec<usize>,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterCompareArgs {
    /// Fixation map file.
    map: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 24, 32])]
    k_list: Vec<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Methods to run.
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
    methods: Vec<Method>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = fixlab::fixation::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainToyArgs {
    #[arg(long, default_value_t = LossKind::PoolingKld)]
    loss: LossKind,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = fixlab::losses::DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 200)]
    scenes: usize,
    #[arg(long, default_value_t = 50)]
    eval_scenes: usize,
    #[arg(long, default_value_t = fixlab::trainer::DEFAULT_CHANNELS)]
    channels: usize,
    /// Training trace CSV (default: stdout).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final model checkpoint JSON.
    #[arg(long)]
    model: Option<PathBuf>,
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Partial,
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn parse_cli() -> Result<Cli, ExitCode> {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config_path(&args) {
        match config::apply(&Cli::command(), args, &path) {
            Ok(a) => args = a,
            Err(e) => {
                eprintln!("error: {e:#}");
                return Err(ExitCode::from(1));
            }
        }
    }
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(1)
        } else {
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(1);
        }
    }
    let opts = input::LoadOptions {
        resize_short: cli.resize_short,
    };
    let result = match cli.command {
        Command::Sparsify(a) => commands::sparsify(&a, opts),
        Command::Blur(a) => commands::blur(&a, opts),
        Command::Eval(a) => commands::eval(&a, opts),
        Command::Losscheck(a) => commands::losscheck(&a),
        Command::DownsampleStudy(a) => commands::downsample_study(&a, opts),
        Command::ClusterCompare(a) => commands::cluster_compare(&a, opts),
        Command::TrainToy(a) => commands::train_toy(&a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
