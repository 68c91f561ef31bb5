use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use fixlab::clustering::{preservation_sweep, sparsify as sparsify_map, SWEEP_HEADER};
use fixlab::dataset::list_rasters;
use fixlab::fixation::{default_sigma, gaussian_blur};
use fixlab::io::{write_gray_stretched, write_sparse};
use fixlab::losses::{grad_check, random_instance, PoolingSpec};
use fixlab::metrics::{score_pair, write_reports_csv, MetricConfig, MetricsReport};
use fixlab::resampling::precision_loss_curve;
use fixlab::trainer::{train, TrainConfig};
use fixlab::FixationPixelMap;

use crate::input::{fixation_inputs, LoadOptions};
use crate::{
    BlurArgs, ClusterCompareArgs, DownsampleArgs, EvalArgs, LosscheckArgs, Outcome, SparsifyArgs,
    TrainToyArgs,
};

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn outcome(failures: usize) -> Outcome {
    if failures == 0 {
        Outcome::Success
    } else {
        Outcome::Partial
    }
}

pub fn sparsify(args: &SparsifyArgs, opts: LoadOptions) -> Result<Outcome> {
    let single = args.input.is_file();
    if !single && !args.input.is_dir() {
        bail!("{}: no such file or directory", args.input.display());
    }
    if !single && args.out.is_none() {
        bail!("--out DIR is required when the input is a directory");
    }
    let (inputs, problems) = fixation_inputs(&args.input)?;
    if inputs.is_empty() && problems == 0 {
        bail!("{}: no fixation maps found", args.input.display());
    }
    if let (false, Some(dir)) = (single, &args.out) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let results: Vec<_> = inputs
        .par_iter()
        .map(|(_, path)| -> Result<_> {
            let map = opts.fixations(path, args.threshold)?;
            sparsify_map(&map, args.method, args.k, args.seed.seed)
                .with_context(|| format!("{}", path.display()))
        })
        .collect();

    let mut failures = problems;
    for ((id, path), result) in inputs.iter().zip(results) {
        let sf = match result {
            Ok(sf) => sf,
            Err(e) => {
                eprintln!("error: {e:#}");
                failures += 1;
                continue;
            }
        };
        let written = match (&args.out, single) {
            (None, _) => {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{}", sf.to_json()?).map_err(anyhow::Error::from)
            }
            (Some(file), true) => write_sparse(file, &sf).map_err(anyhow::Error::from),
            (Some(dir), false) => {
                write_sparse(dir.join(format!("{id}.json")), &sf).map_err(anyhow::Error::from)
            }
        };
        if let Err(e) = written {
            eprintln!("error: {}: {e:#}", path.display());
            failures += 1;
        }
    }
    Ok(outcome(failures))
}

pub fn blur(args: &BlurArgs, opts: LoadOptions) -> Result<Outcome> {
    let map = opts.fixations(&args.input, args.threshold)?;
    let sigma = args.sigma.unwrap_or_else(|| default_sigma(map.height()));
    let blob = gaussian_blur(&map, sigma)?;
    write_gray_stretched(&args.out, &blob)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(Outcome::Success)
}

struct Pair {
    id: String,
    pred: PathBuf,
    blob: PathBuf,
    pixels: PathBuf,
}

/// Predictions paired with both ground-truth files by stem. Unpaired files
/// are reported and left out.
fn pair_eval_inputs(args: &EvalArgs) -> Result<Vec<Pair>> {
    let preds = list_rasters(&args.pred).with_context(|| args.pred.display().to_string())?;
    let mut blobs =
        list_rasters(&args.gt_blobs).with_context(|| args.gt_blobs.display().to_string())?;
    let mut pixels =
        list_rasters(&args.gt_pixels).with_context(|| args.gt_pixels.display().to_string())?;
    let mut pairs = Vec::new();
    for (id, pred) in preds {
        match (blobs.remove(&id), pixels.remove(&id)) {
            (Some(blob), Some(pix)) => pairs.push(Pair {
                id,
                pred,
                blob,
                pixels: pix,
            }),
            (blob, _) => {
                let missing = if blob.is_none() {
                    "blob map"
                } else {
                    "fixation map"
                };
                eprintln!("warning: {id}: no matching {missing}, skipped");
            }
        }
    }
    for id in blobs.keys().chain(pixels.keys()) {
        eprintln!("warning: {id}: ground truth without a prediction, skipped");
    }
    Ok(pairs)
}

/// Fixation maps from the shuffled pool, keyed by stem.
fn load_pool(
    dir: &Path,
    threshold: f64,
    opts: LoadOptions,
) -> Result<BTreeMap<String, FixationPixelMap>> {
    let files = list_rasters(dir).with_context(|| dir.display().to_string())?;
    let maps: Vec<_> = files
        .par_iter()
        .map(|(id, p)| opts.fixations(p, threshold).map(|m| (id.clone(), m)))
        .collect::<Result<_>>()?;
    Ok(maps.into_iter().collect())
}

/// Union of every pool map other than `id`, moved onto a `width x height` grid.
fn shuffled_negatives(
    pool: &BTreeMap<String, FixationPixelMap>,
    id: &str,
    width: usize,
    height: usize,
) -> Result<FixationPixelMap> {
    let mut points = Vec::new();
    for (other, map) in pool {
        if other == id {
            continue;
        }
        let map = if map.dims() == (width, height) {
            map.clone()
        } else {
            map.rescaled(width, height)?
        };
        points.extend_from_slice(map.points());
    }
    Ok(FixationPixelMap::new(width, height, points)?)
}

pub fn eval(args: &EvalArgs, opts: LoadOptions) -> Result<Outcome> {
    let pairs = pair_eval_inputs(args)?;
    if pairs.is_empty() {
        bail!("no prediction has both a blob map and a fixation map");
    }
    let pool = match &args.shuffled_pool {
        Some(dir) => Some(load_pool(dir, args.threshold, opts)?),
        None => None,
    };
    let config = MetricConfig {
        n_splits: args.splits,
        seed: args.seed.seed,
        eps: args.eps,
        ..MetricConfig::default()
    };

    let results: Vec<Result<MetricsReport>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let pred = opts.gray(&pair.pred)?;
            let blob = opts.gray(&pair.blob)?;
            let pixels = opts.fixations(&pair.pixels, args.threshold)?;
            let other = match &pool {
                Some(pool) => Some(shuffled_negatives(
                    pool,
                    &pair.id,
                    pred.width(),
                    pred.height(),
                )?),
                None => None,
            };
            score_pair(
                &pred,
                &blob,
                &pixels,
                other.as_ref(),
                &config.for_pair(i as u64),
            )
            .with_context(|| pair.id.clone())
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = 0;
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Ok(report) => {
                for (metric, why) in &report.failures {
                    eprintln!("warning: {}: {} undefined: {why}", pair.id, metric.name());
                }
                rows.push((pair.id.clone(), report));
            }
            Err(e) => {
                eprintln!("warning: {e:#}, skipped");
                failures += 1;
            }
        }
    }
    let mut out = sink(args.out.as_deref())?;
    write_reports_csv(&mut out, &rows, true)?;
    out.flush()?;
    Ok(outcome(failures))
}

pub fn losscheck(args: &LosscheckArgs) -> Result<Outcome> {
    if args.size == 0 {
        bail!("--size must be positive");
    }
    let spec = PoolingSpec::new(args.window)?;
    let (label, pred) = random_instance(args.seed.seed, args.size, args.size);
    let report = grad_check(args.loss, &label, &pred, spec, args.eps, args.step)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome::Success)
}

pub fn downsample_study(args: &DownsampleArgs, opts: LoadOptions) -> Result<Outcome> {
    let pixels = opts.fixations(&args.pixels, args.threshold)?;
    let blob = match &args.blob {
        Some(p) => opts.gray(p)?,
        None => {
            let sigma = args.sigma.unwrap_or_else(|| default_sigma(pixels.height()));
            gaussian_blur(&pixels, sigma)?
        }
    };
    if blob.dims() != pixels.dims() {
        bail!(
            "blob map is {}x{} but fixation map is {}x{}",
            blob.width(),
            blob.height(),
            pixels.width(),
            pixels.height()
        );
    }
    let curve = precision_loss_curve(&blob, &pixels, &args.factors)?;
    let mut out = sink(args.out.as_deref())?;
    curve.write_csv(&mut out)?;
    out.flush()?;
    Ok(Outcome::Success)
}

pub fn cluster_compare(args: &ClusterCompareArgs, opts: LoadOptions) -> Result<Outcome> {
    let map = opts.fixations(&args.map, args.threshold)?;
    if map.is_empty() {
        bail!("{}: fixation map is empty", args.map.display());
    }
    let sigma = args.sigma.unwrap_or_else(|| default_sigma(map.height()));
    let sweeps: Vec<_> = args
        .methods
        .par_iter()
        .map(|&m| preservation_sweep(&map, m, &args.k_list, sigma, args.seed.seed))
        .collect::<fixlab::Result<_>>()?;

    let mut w = csv::Writer::from_writer(sink(args.out.as_deref())?);
    let mut header = vec!["method"];
    header.extend(SWEEP_HEADER);
    w.write_record(&header)?;
    for (method, scores) in args.methods.iter().zip(&sweeps) {
        for s in scores {
            let mut record = vec![method.to_string()];
            record.extend(s.csv_fields());
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(Outcome::Success)
}

pub fn train_toy(args: &TrainToyArgs) -> Result<Outcome> {
    let config = TrainConfig {
        epochs: args.epochs,
        batch: args.batch,
        lr: args.lr,
        loss: args.loss,
        window: args.window,
        seed: args.seed.seed,
        scenes: args.scenes,
        eval_scenes: args.eval_scenes,
        channels: args.channels,
        ..TrainConfig::default()
    };
    let (trace, model) = train(&config)?;
    let mut out = sink(args.trace.as_deref())?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    if let Some(p) = &args.model {
        std::fs::write(p, model.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    let (first, last) = (trace.initial(), trace.last());
    eprintln!(
        "{}: mean loss {:.4} -> {:.4}, hit rate {:.3} -> {:.3}",
        args.loss, first.mean_loss, last.mean_loss, first.hit_rate, last.hit_rate
    );
    Ok(Outcome::Success)
}
