//! `perstrack`: track, label, evaluate and benchmark overhead LiDAR person
//! detections from the command line.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod labelcloud;
mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use perstrack_core::eval::{clear_mot, precision_recall_curve, slice_stats};
use perstrack_core::io::{bench_tracker, load_clip, load_tracks, save_clip, write_tracks};
use perstrack_core::tracker::{generate_pseudo_gt, run_clip};
use perstrack_core::{EvalConfig, TrackerConfig, TrackerVariant};

use labelcloud::RotationUnit;
use report::Format;

#[derive(Parser)]
#[command(
    name = "perstrack",
    version,
    about = "Person tracking and evaluation for overhead LiDAR detections"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tracker over a detection clip and write its tracks.
    Track(TrackArgs),
    /// Assign ids to a labelled clip, producing pseudo ground truth.
    PseudoGt(PseudoGtArgs),
    /// Distance-sliced detection metrics against a labelled clip.
    EvalDet(EvalDetArgs),
    /// CLEAR-MOT and IDF1 of a track file against a ground-truth track file.
    EvalMot(EvalMotArgs),
    /// Per-frame tracker latency percentiles.
    Bench(BenchArgs),
    /// Convert a directory of labelCloud JSON exports into a label clip.
    ConvertLabelcloud(ConvertArgs),
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    variant: TrackerVariant,
    /// Clip directory of scored detection frames.
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `key = value` tracker config; keys it omits keep the variant defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PseudoGtArgs {
    /// Clip directory of label frames (scores optional and ignored).
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "ab3dmot")]
    variant: TrackerVariant,
}

#[derive(Args)]
struct EvalDetArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Cumulative horizontal radii in metres, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    radii: Vec<f64>,
    /// Minimum rotated BEV IoU for a true positive.
    #[arg(long, default_value_t = 0.10)]
    iou: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write precision-recall curve points as records to this file.
    #[arg(long)]
    dump_curves: Option<PathBuf>,
}

#[derive(Args)]
struct EvalMotArgs {
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// IoU thresholds; one metric block per value.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.1")]
    iou: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark only this variant; both are run side by side by default.
    #[arg(long)]
    variant: Option<TrackerVariant>,
    #[arg(long)]
    detections: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct ConvertArgs {
    /// Directory of labelCloud `*.json` files, one per frame in name order.
    #[arg(long)]
    input: PathBuf,
    /// Output clip directory.
    #[arg(long)]
    out: PathBuf,
    /// Clip id written to the clip meta file (defaults to the output dir name).
    #[arg(long)]
    clip_id: Option<String>,
    #[arg(long, default_value_t = 3.0)]
    rate_hz: f64,
    /// Unit of the exported z rotation.
    #[arg(long, value_enum, default_value_t = RotationUnit::Deg)]
    rotation: RotationUnit,
}

/// Bad invocation detected after argument parsing; exits with status 1.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Track(a) => track(a),
        Command::PseudoGt(a) => pseudo_gt(a),
        Command::EvalDet(a) => eval_det(a),
        Command::EvalMot(a) => eval_mot(a),
        Command::Bench(a) => bench(a),
        Command::ConvertLabelcloud(a) => convert(a),
    }
}

/// Defaults for `variant`, overridden by the config file if one is given.
/// A file that selects a different variant is rejected.
fn tracker_config(variant: TrackerVariant, path: Option<&Path>) -> Result<TrackerConfig> {
    let Some(path) = path else {
        return Ok(TrackerConfig::default_for(variant));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = TrackerConfig::parse(&text, variant).with_context(|| path.display().to_string())?;
    if cfg.variant != variant {
        return Err(usage(format!(
            "{} selects variant {} but --variant is {variant}",
            path.display(),
            cfg.variant
        )));
    }
    Ok(cfg)
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn track(a: TrackArgs) -> Result<()> {
    let cfg = tracker_config(a.variant, a.config.as_deref())?;
    let clip = load_clip(&a.detections, true)?;
    let outputs = run_clip(&cfg, &clip)?;
    log::info!(
        "{}: {} frames, {} track outputs",
        clip.clip_id,
        clip.frames.len(),
        outputs.len()
    );
    write_output(&a.out, &write_tracks(&outputs))
}

fn pseudo_gt(a: PseudoGtArgs) -> Result<()> {
    let labels = load_clip(&a.labels, false)?;
    let outputs = generate_pseudo_gt(&labels, a.variant)?;
    log::info!("{}: {} labelled boxes", labels.clip_id, outputs.len());
    write_output(&a.out, &write_tracks(&outputs))
}

fn eval_det(a: EvalDetArgs) -> Result<()> {
    let cfg = EvalConfig {
        tp_iou_min: a.iou,
        radii: a.radii,
        ..EvalConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let preds = load_clip(&a.detections, true)?;
    let gts = load_clip(&a.labels, false)?;
    let stats = slice_stats(&preds, &gts, &cfg)?;
    let rows: Vec<_> = stats.iter().map(|s| s.to_row()).collect();
    print!("{}", report::detection_rows(&rows, a.format));
    if let Some(path) = a.dump_curves {
        let mut text = String::new();
        for s in &stats {
            let gt_count = s.tp + s.fn_;
            text.push_str(&report::curve_records(
                s.radius,
                &precision_recall_curve(&s.scored_flags, gt_count),
            ));
        }
        write_output(&path, &text)?;
    }
    Ok(())
}

fn eval_mot(a: EvalMotArgs) -> Result<()> {
    if a.iou.is_empty() || a.iou.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(usage("--iou values must lie in (0, 1]"));
    }
    let tracks = load_tracks(&a.tracks)?;
    let gt = load_tracks(&a.gt)?;
    let blocks: Vec<_> = a.iou.iter().map(|&t| clear_mot(&tracks, &gt, t)).collect();
    print!("{}", report::mot_blocks(&blocks, a.format));
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let variants = match a.variant {
        Some(v) => vec![v],
        None if a.config.is_some() => return Err(usage("--config needs --variant")),
        None => TrackerVariant::ALL.to_vec(),
    };
    let clip = load_clip(&a.detections, true)?;
    let mut reports = Vec::new();
    for variant in variants {
        let cfg = tracker_config(variant, a.config.as_deref())?;
        reports.push((variant.to_string(), bench_tracker(&cfg, &clip, a.repeats)?));
    }
    print!("{}", report::latency(&reports, a.format));
    Ok(())
}

fn convert(a: ConvertArgs) -> Result<()> {
    if !(a.rate_hz.is_finite() && a.rate_hz > 0.0) {
        return Err(usage("--rate-hz must be positive"));
    }
    let clip_id = a.clip_id.unwrap_or_else(|| {
        a.out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "labels".into())
    });
    let clip = labelcloud::convert_dir(&a.input, clip_id, a.rate_hz, a.rotation)?;
    save_clip(&clip, &a.out, false)?;
    log::info!("wrote {} frames to {}", clip.frames.len(), a.out.display());
    Ok(())
}
