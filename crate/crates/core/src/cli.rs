//! The `actiontube` command line.
//!
//! Exit codes: 0 on success, 2 for unreadable or malformed input, 3 for
//! invalid flags. Machine-readable results go to files; tables go to stdout.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::batch::{self, ActionnessConfig, FusionConfig};
use crate::count_signal::FrameDetections;
use crate::error::{Error, Result};
use crate::evaluation::{video_map, EvalConfig, EvalReport, VideoTube, DEFAULT_DELTAS};
use crate::fusion::{CropScheme, FusionMethod, Granularity, Stream};
use crate::geometry::Tube;
use crate::linking::{ExtractionConfig, DEFAULT_MAX_GAP, DEFAULT_MIN_TUBE_LEN};
use crate::pipeline::{self, read_detections, read_scores, read_tubes};
use crate::synth::{generate_scene, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FLAGS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "actiontube", version, about = "Action-tube extraction, score fusion and video-mAP evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Link per-frame person boxes into action tubes.
    ExtractTubes(ExtractArgs),
    /// Fuse clip and crop scores into one prediction per video.
    Fuse(FuseArgs),
    /// Per-frame actionness, thresholded spans and per-tube sums.
    Actionness(ActionnessArgs),
    /// Video-AP / mAP of predicted tubes against ground truth.
    Evaluate(EvaluateArgs),
    /// Write a deterministic synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Parallel {
    /// Worker threads for per-video processing.
    #[arg(long = "parallel", default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct Extraction {
    #[arg(long, default_value_t = DEFAULT_MIN_TUBE_LEN)]
    min_tube_len: usize,
    #[arg(long, default_value_t = crate::count_signal::DEFAULT_MEDIAN_WINDOW)]
    median_window: usize,
    /// Longest run of empty frames bridged inside a proposal.
    #[arg(long, default_value_t = DEFAULT_MAX_GAP)]
    max_gap: usize,
    /// Do not offer held copies of the previous frame's boxes on frames
    /// that fall short of the expected count.
    #[arg(long)]
    no_hold_missed: bool,
}

impl Extraction {
    fn config(&self) -> Result<ExtractionConfig> {
        let cfg = ExtractionConfig {
            min_tube_len: self.min_tube_len,
            median_window: self.median_window,
            max_gap: self.max_gap,
            hold_missed: !self.no_hold_missed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct Fusion {
    #[arg(long, default_value = "mean", value_parser = parse_vocab::<FusionMethod>)]
    method: FusionMethod,
    #[arg(long, default_value = "fixed", value_parser = parse_vocab::<CropScheme>)]
    crop_scheme: CropScheme,
    /// Comma-separated; several are averaged (multi-granular).
    #[arg(long, default_value = "net16", value_delimiter = ',', value_parser = parse_vocab::<Granularity>)]
    granularities: Vec<Granularity>,
    #[arg(long, default_value = "rgb", value_parser = parse_vocab::<Stream>)]
    stream: Stream,
    /// Apply softmax to raw scores before aggregation.
    #[arg(long)]
    softmax: bool,
}

impl Fusion {
    fn config(&self) -> FusionConfig {
        FusionConfig {
            stream: self.stream,
            method: self.method,
            crop_scheme: self.crop_scheme,
            granularities: self.granularities.clone(),
            softmax: self.softmax,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Detection files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output file (single input only).
    #[arg(short, long, conflicts_with = "out_dir")]
    output: Option<PathBuf>,
    /// Output directory; each input `x.jsonl` becomes `x.tubes.jsonl`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Label tubes with the fused class from this score file.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[command(flatten)]
    extraction: Extraction,
    #[command(flatten)]
    fusion: Fusion,
    #[command(flatten)]
    parallel: Parallel,
}

#[derive(Debug, Args)]
struct FuseArgs {
    scores: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    fusion: Fusion,
    #[command(flatten)]
    parallel: Parallel,
}

#[derive(Debug, Args)]
struct ActionnessArgs {
    scores: PathBuf,
    /// Detections; give presence and, without --tubes, the tubes to score.
    #[arg(long, required_unless_present = "tubes")]
    detections: Option<PathBuf>,
    #[arg(long)]
    tubes: Option<PathBuf>,
    #[arg(long)]
    class: usize,
    #[arg(long, allow_hyphen_values = true)]
    threshold: f64,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "net16", value_parser = parse_vocab::<Granularity>)]
    granularity: Granularity,
    #[arg(long, default_value = "fixed", value_parser = parse_vocab::<CropScheme>)]
    crop_scheme: CropScheme,
    #[command(flatten)]
    extraction: Extraction,
    #[command(flatten)]
    parallel: Parallel,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    predictions: PathBuf,
    ground_truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTAS.to_vec())]
    deltas: Vec<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    videos: usize,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 2)]
    max_persons: usize,
    #[arg(long, default_value_t = 1)]
    jitter: u32,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    fp_rate: f64,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    miss_rate: f64,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 1.0)]
    score_noise: f64,
    /// Receives detections.jsonl, gt_tubes.jsonl and scores.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_vocab<T: std::str::FromStr<Err = String>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|v| format!("unknown value `{v}`"))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FLAGS } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) => EXIT_FLAGS,
        _ => EXIT_INPUT,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::ExtractTubes(a) => extract_cmd(a),
        Command::Fuse(a) => fuse_cmd(a),
        Command::Actionness(a) => actionness_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn pool(p: &Parallel) -> Result<rayon::ThreadPool> {
    if p.threads == 0 {
        return Err(Error::InvalidParameter("--parallel must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(p.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn output_paths(a: &ExtractArgs) -> Result<Vec<PathBuf>> {
    match (&a.output, &a.out_dir) {
        (Some(out), None) if a.inputs.len() == 1 => Ok(vec![out.clone()]),
        (Some(_), None) => Err(Error::InvalidParameter("--output takes a single input; use --out-dir".into())),
        (None, Some(dir)) => a
            .inputs
            .iter()
            .map(|input| {
                let stem = input
                    .file_stem()
                    .ok_or_else(|| Error::InvalidParameter(format!("{} has no file name", input.display())))?;
                Ok(dir.join(format!("{}.tubes.jsonl", stem.to_string_lossy())))
            })
            .collect(),
        _ => Err(Error::InvalidParameter("one of --output or --out-dir is required".into())),
    }
}

fn extract_cmd(a: ExtractArgs) -> Result<()> {
    let cfg = a.extraction.config()?;
    let fusion = a.fusion.config();
    let outputs = output_paths(&a)?;
    let pool = pool(&a.parallel)?;
    let scores = a.scores.as_deref().map(read_scores).transpose()?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    for (input, output) in a.inputs.iter().zip(&outputs) {
        let videos = read_detections(input)?;
        let labels = scores.as_ref().map(|s| (s, &fusion));
        let per_video: Vec<Vec<VideoTube>> = pool.install(|| {
            videos
                .par_iter()
                .map(|v| batch::extract_video(v, &cfg, labels))
                .collect::<Result<_>>()
        })?;
        let tubes: Vec<VideoTube> = per_video.into_iter().flatten().collect();
        pipeline::write_tubes(output, &tubes)?;
        println!("{}: {} videos, {} tubes -> {}", input.display(), videos.len(), tubes.len(), output.display());
    }
    Ok(())
}

fn fuse_cmd(a: FuseArgs) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    let cfg = a.fusion.config();
    let ids: Vec<&str> = scores.video_ids().collect();
    let preds = pool(&a.parallel)?.install(|| {
        ids.par_iter()
            .map(|id| batch::fuse_video(&scores, id, &cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    pipeline::write_predictions(&a.output, &preds)?;
    println!("{:<24} {:>6}", "video", "label");
    for p in &preds {
        println!("{:<24} {:>6}", p.video_id, p.label);
    }
    Ok(())
}

fn group_tubes(tubes: Vec<VideoTube>) -> std::collections::BTreeMap<String, Vec<Tube>> {
    let mut map: std::collections::BTreeMap<String, Vec<Tube>> = Default::default();
    for vt in tubes {
        map.entry(vt.video_id).or_default().push(vt.tube);
    }
    map
}

fn actionness_cmd(a: ActionnessArgs) -> Result<()> {
    if !a.threshold.is_finite() {
        return Err(Error::InvalidParameter("--threshold must be finite".into()));
    }
    let extraction = a.extraction.config()?;
    let scores = read_scores(&a.scores)?;
    if let Some(k) = scores.num_classes().filter(|&k| a.class >= k) {
        return Err(Error::InvalidParameter(format!("--class {} but scores have {k} classes", a.class)));
    }
    let cfg = ActionnessConfig {
        class: a.class,
        threshold: a.threshold,
        granularity: a.granularity,
        crop_scheme: a.crop_scheme,
    };
    let detections: Option<Vec<FrameDetections>> = a.detections.as_deref().map(read_detections).transpose()?;
    let tubes = a.tubes.as_deref().map(read_tubes).transpose()?.map(group_tubes);

    // (video, presence, tubes) per video
    let work: Vec<(String, Vec<bool>, Vec<Tube>)> = match (&detections, &tubes) {
        (Some(dets), tubes) => dets
            .iter()
            .map(|d| {
                let video_tubes = match tubes {
                    Some(t) => t.get(d.video_id()).cloned().unwrap_or_default(),
                    None => crate::linking::extract_tubes(d, &extraction)?,
                };
                Ok((d.video_id().to_string(), batch::presence_from_detections(d), video_tubes))
            })
            .collect::<Result<_>>()?,
        (None, Some(tubes)) => tubes
            .iter()
            .map(|(id, ts)| {
                let len = ts.iter().map(|t| t.span().end() as usize + 1).max().unwrap_or(0);
                (id.clone(), batch::presence_from_tubes(ts, len), ts.clone())
            })
            .collect(),
        (None, None) => unreachable!("clap requires --detections or --tubes"),
    };
    let records = pool(&a.parallel)?.install(|| {
        work.par_iter()
            .filter(|(_, presence, _)| !presence.is_empty())
            .map(|(id, presence, ts)| batch::actionness_record(&scores, id, presence.clone(), ts, &cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    pipeline::write_actionness(&a.output, &records)?;
    println!("{:<24} {:>6} {:>6}", "video", "spans", "tubes");
    for r in &records {
        println!("{:<24} {:>6} {:>6}", r.video_id, r.spans.len(), r.tubes.len());
    }
    Ok(())
}

/// Aligned mAP-per-threshold table.
pub fn format_map_table(report: &EvalReport) -> String {
    let mut out = format!("video-mAP ({} interpolation)\n{:>8} {:>8}\n", report.interpolation, "delta", "mAP");
    for d in &report.per_delta {
        out.push_str(&format!("{:>8.2} {:>8.4}\n", d.delta, d.map));
    }
    out
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let cfg = EvalConfig::new(a.deltas.clone())?;
    let preds = read_tubes(&a.predictions)?;
    let gts = read_tubes(&a.ground_truth)?;
    let report = video_map(&preds, &gts, &cfg)?;
    pipeline::write_report(&a.output, &report)?;
    print!("{}", format_map_table(&report));
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: a.seed,
        videos: a.videos,
        frames: a.frames,
        max_persons: a.max_persons,
        jitter: a.jitter,
        fp_rate: a.fp_rate,
        miss_rate: a.miss_rate,
        num_classes: a.classes,
        score_noise: a.score_noise,
    };
    let corpus = generate_scene(&cfg)?;
    fs::create_dir_all(&a.out_dir).map_err(|source| Error::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    let path = |name: &str| -> PathBuf { Path::new(&a.out_dir).join(name) };
    pipeline::write_detections(&path("detections.jsonl"), &corpus.detections)?;
    pipeline::write_tubes(&path("gt_tubes.jsonl"), &corpus.ground_truth)?;
    pipeline::write_scores(&path("scores.jsonl"), &corpus.scores)?;
    println!(
        "{} videos, {} ground-truth tubes -> {}",
        corpus.detections.len(),
        corpus.ground_truth.len(),
        a.out_dir.display()
    );
    Ok(())
}
