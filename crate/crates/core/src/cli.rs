//! Command-line front end. Each subcommand is a thin wrapper over the
//! library; sequences are processed one per tracker instance, optionally in
//! parallel across sequences.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cmc::{estimate_affine_ransac, write_gmc, AffineTransform, GmcMap, RansacParams};
use crate::error::{Error, Result};
use crate::geometry::{filter_min_area, BoundingBox, Detection};
use crate::io::{self, LoadOptions, ParseOptions, SequenceBundle, TrackRow};
use crate::metrics::{self, FrameBoxes, MotaReport, SotFrameRecord, SotScore};
use crate::postproc;
use crate::sot::{frame_center_box, SotSelector, SotSource};
use crate::synth::{self, ScenarioConfig};
use crate::tracker::{rescale_box, with_initial_box, Tracker, TrackerConfig};

#[derive(Debug, Parser)]
#[command(
    name = "uavtrack",
    version,
    about = "Detection-driven UAV tracking and evaluation"
)]
pub struct Cli {
    /// Tracker configuration file (JSON object of tracker fields).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Sequences processed in parallel.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Seed for randomized stages (synth, gmc-estimate).
    #[arg(long, global = true, value_name = "K")]
    pub seed: Option<u64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Print the process peak resident set size on exit.
    #[arg(long, global = true, hide = true)]
    pub report_peak_rss: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multi-object tracking; writes one MOT track file per sequence.
    Track(TrackArgs),
    /// Single-object tracking; writes one JSON box list per sequence.
    Sot(SotArgs),
    /// Score SOT predictions against ground truth.
    EvalSot(EvalArgs),
    /// Score MOT predictions against ground truth.
    EvalMot(EvalArgs),
    /// Fill short gaps in track files by linear interpolation.
    Interp(InterpArgs),
    /// Box size statistics of ground-truth files.
    Stats(StatsArgs),
    /// Generate synthetic sequences.
    Synth(SynthArgs),
    /// Estimate per-frame camera motion from point correspondences.
    GmcEstimate(GmcArgs),
}

/// Overrides for individual tracker fields.
#[derive(Debug, Clone, Default, Args)]
pub struct TrackerOverrides {
    #[arg(long)]
    pub track_high_thresh: Option<f64>,
    #[arg(long)]
    pub track_low_thresh: Option<f64>,
    #[arg(long)]
    pub new_track_thresh: Option<f64>,
    #[arg(long)]
    pub match_thresh: Option<f64>,
    #[arg(long)]
    pub second_match_thresh: Option<f64>,
    #[arg(long)]
    pub unconfirmed_match_thresh: Option<f64>,
    #[arg(long)]
    pub track_buffer: Option<u32>,
    #[arg(long)]
    pub min_box_area: Option<f64>,
    #[arg(long)]
    pub proximity_thresh: Option<f64>,
    #[arg(long)]
    pub appearance_thresh: Option<f64>,
    #[arg(long)]
    pub ema_alpha: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub with_reid: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub with_cmc: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub gating: Option<bool>,
}

impl TrackerOverrides {
    /// Applies the overrides and returns the ones given, by field name.
    fn apply(&self, cfg: &mut TrackerConfig) -> BTreeMap<String, Value> {
        let mut given = BTreeMap::new();
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                    given.insert(stringify!($field).to_string(), serde_json::json!(v));
                }
            )*};
        }
        set!(
            track_high_thresh,
            track_low_thresh,
            new_track_thresh,
            match_thresh,
            second_match_thresh,
            unconfirmed_match_thresh,
            track_buffer,
            min_box_area,
            proximity_thresh,
            appearance_thresh,
            ema_alpha,
            with_reid,
            with_cmc,
            gating
        );
        given
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// A sequence directory or a directory of sequence directories.
    pub input: PathBuf,
    /// Embedding dimension; read from the embedding file when omitted.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Drop detections smaller than this area before tracking.
    #[arg(long, value_name = "PX2")]
    pub filter_min_area: Option<f64>,
    /// Keep boxes that cover the whole frame.
    #[arg(long)]
    pub keep_full_frame: bool,
    /// Record per-sequence wall time in the manifest.
    #[arg(long)]
    pub record_timing: bool,
    #[command(flatten)]
    pub overrides: TrackerOverrides,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SotArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Initial target box x,y,w,h; overrides the sequence's own.
    #[arg(long, value_parser = parse_floats::<4>, value_name = "X,Y,W,H")]
    pub init_box: Option<[f64; 4]>,
    /// Resolution the initial box is given in.
    #[arg(long, value_parser = parse_floats::<2>, value_name = "W,H")]
    pub init_box_resolution: Option<[f64; 2]>,
    /// Write an empty prediction instead of repeating the last box.
    #[arg(long)]
    pub abstain_when_lost: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of prediction files named after their sequence.
    #[arg(long)]
    pub pred: PathBuf,
    /// A ground-truth sequence directory or a directory of them.
    #[arg(long)]
    pub gt: PathBuf,
    /// IoU threshold for MOT matching.
    #[arg(long, default_value_t = metrics::DEFAULT_MATCH_IOU)]
    pub iou_thresh: f64,
    /// Clip predicted and ground-truth boxes to the frame before scoring.
    #[arg(long)]
    pub clip: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InterpArgs {
    /// A track file or a directory of track files.
    pub input: PathBuf,
    #[arg(long, default_value_t = postproc::DEFAULT_MAX_GAP)]
    pub max_gap: u32,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Ground-truth files or directories containing sequences.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub keep_full_frame: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scenario file (JSON object of scenario fields).
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Number of sequences; each gets seed + index.
    #[arg(long, default_value_t = 1)]
    pub sequences: usize,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub n_objects: Option<usize>,
    #[arg(long)]
    pub n_frames: Option<u32>,
    #[arg(long)]
    pub miss_rate: Option<f64>,
    #[arg(long)]
    pub fp_rate: Option<f64>,
    #[arg(long)]
    pub position_jitter: Option<f64>,
    #[arg(long)]
    pub size_jitter: Option<f64>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long, value_parser = parse_floats::<2>, value_name = "DX,DY")]
    pub camera_velocity: Option<[f64; 2]>,
    #[arg(long)]
    pub camera_jitter: Option<f64>,
    #[arg(long)]
    pub background_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GmcArgs {
    /// A correspondence file, a sequence directory or a directory of them.
    pub input: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    pub inlier_thresh: f64,
}

/// Parses exactly `N` comma-separated numbers.
fn parse_floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mot,
    Sot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStatus {
    pub name: String,
    pub input: PathBuf,
    pub output: PathBuf,
    /// "ok" or "failed".
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub frames: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: Mode,
    pub inputs: Vec<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub overrides: BTreeMap<String, Value>,
    pub config: TrackerConfig,
    pub output_dir: PathBuf,
    pub sequences: Vec<SequenceStatus>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    if cli.report_peak_rss {
        if let Some(kb) = peak_rss_kb() {
            eprintln!("peak_rss_kb: {kb}");
        }
    }
    code
}

/// `VmHWM` from `/proc/self/status`, where available.
fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be >= 1".into()));
    }
    match &cli.command {
        Command::Track(a) => cmd_run(cli, &a.run, None),
        Command::Sot(a) => cmd_run(cli, &a.run, Some(a)),
        Command::EvalSot(a) => cmd_eval_sot(cli, a),
        Command::EvalMot(a) => cmd_eval_mot(cli, a),
        Command::Interp(a) => cmd_interp(cli, a),
        Command::Stats(a) => cmd_stats(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
        Command::GmcEstimate(a) => cmd_gmc_estimate(cli, a),
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::Config("--out DIR is required for this command".into()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs `f` over `items` on `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> R + Sync,
) -> Result<Vec<R>> {
    if jobs <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

pub fn load_tracker_config(
    path: Option<&Path>,
    overrides: &TrackerOverrides,
) -> Result<(TrackerConfig, BTreeMap<String, Value>)> {
    let mut cfg = match path {
        Some(p) => io::read_json::<TrackerConfig>(p)?,
        None => TrackerConfig::default(),
    };
    let given = overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok((cfg, given))
}

fn load_for_run(dir: &Path, cfg: &TrackerConfig, args: &RunArgs) -> Result<SequenceBundle> {
    let embeddings = if cfg.with_reid {
        match args.embedding_dim {
            Some(d) => Some(d),
            None => {
                let p = dir.join(io::EMB_FILE);
                Some(io::sniff_embedding_dim(&p)?.unwrap_or(0))
            }
        }
    } else {
        None
    };
    io::load_sequence(
        dir,
        &LoadOptions {
            embeddings,
            gmc: cfg.with_cmc,
            gt: false,
            correspondences: false,
            drop_full_frame: !args.keep_full_frame,
        },
    )
}

fn frame_detections(bundle: &SequenceBundle, frame: u32, min_area: Option<f64>) -> Vec<Detection> {
    let dets = bundle.detections.frame(frame);
    match min_area {
        Some(a) => filter_min_area(dets, a),
        None => dets.to_vec(),
    }
}

fn track_sequence(
    bundle: &SequenceBundle,
    cfg: &TrackerConfig,
    args: &RunArgs,
) -> Result<Vec<TrackRow>> {
    let mut tracker = Tracker::new(*cfg)?;
    let mut rows = Vec::new();
    for f in 1..=bundle.info.frames {
        let dets = frame_detections(bundle, f, args.filter_min_area);
        let affine = bundle
            .gmc
            .as_ref()
            .filter(|_| cfg.with_cmc)
            .map(|g| g.get(f));
        let out = tracker.step(f, &dets, bundle.embeddings.as_ref(), affine.as_ref())?;
        rows.extend(out.online.iter().map(|t| TrackRow {
            frame: f,
            id: t.id,
            bbox: t.bbox,
            score: t.score,
        }));
    }
    Ok(rows)
}

fn sot_sequence(
    bundle: &SequenceBundle,
    cfg: &TrackerConfig,
    args: &RunArgs,
    sot: &SotArgs,
) -> Result<Vec<(Option<BoundingBox>, SotSource)>> {
    let info = &bundle.info;
    let init = match &sot.init_box {
        Some(v) => Some(BoundingBox::new(v[0], v[1], v[2], v[3])?),
        None => info.init_box.map(BoundingBox::from_array),
    };
    let resolution = sot
        .init_box_resolution
        .as_ref()
        .map(|r| (r[0], r[1]))
        .or(info.init_box_resolution.map(|r| (r[0], r[1])));
    let init = match (init, resolution, info.frame_size()) {
        (Some(b), Some(from), Some(to)) => Some(rescale_box(&b, from, to)),
        (b, _, _) => b,
    };
    let fallback = match (init, info.frame_size()) {
        (Some(b), _) => b,
        (None, Some((w, h))) => frame_center_box(w, h),
        (None, None) => {
            return Err(Error::Config(format!(
                "sequence {}: frame size unknown and no initial box given",
                info.name
            )))
        }
    };
    let mut tracker = Tracker::new(*cfg)?;
    let mut selector =
        SotSelector::new(cfg.track_buffer, fallback).abstain_when_lost(sot.abstain_when_lost);
    let mut out = Vec::with_capacity(info.frames as usize);
    for f in 1..=info.frames {
        let mut dets = frame_detections(bundle, f, args.filter_min_area);
        if f == 1 {
            if let Some(b) = &init {
                dets = with_initial_box(&dets, b);
            }
        }
        let affine = bundle
            .gmc
            .as_ref()
            .filter(|_| cfg.with_cmc)
            .map(|g| g.get(f));
        let frame_out = tracker.step(f, &dets, bundle.embeddings.as_ref(), affine.as_ref())?;
        let rec = selector.select(&frame_out);
        out.push((rec.bbox, rec.source));
    }
    Ok(out)
}

fn cmd_run(cli: &Cli, args: &RunArgs, sot: Option<&SotArgs>) -> Result<i32> {
    let out = out_dir(cli)?;
    let (cfg, overrides) = load_tracker_config(cli.config.as_deref(), &args.overrides)?;
    let seqs = io::discover_sequences(&args.input)?;
    if seqs.is_empty() {
        return Err(Error::Config(format!(
            "{}: no sequence directories (with {}) found",
            args.input.display(),
            io::DET_FILE
        )));
    }
    create_dir(out)?;
    let mode = if sot.is_some() { Mode::Sot } else { Mode::Mot };
    let statuses = parallel_map(cli.jobs, &seqs, |dir| {
        let name = io::sequence_name(dir);
        let ext = if sot.is_some() { "json" } else { "txt" };
        let output = out.join(format!("{name}.{ext}"));
        let start = Instant::now();
        let mut frames = 0;
        let result = (|| -> Result<()> {
            let bundle = load_for_run(dir, &cfg, args)?;
            frames = bundle.info.frames;
            match sot {
                None => io::write_tracks(&output, &track_sequence(&bundle, &cfg, args)?),
                Some(s) => {
                    let boxes: Vec<Option<BoundingBox>> = sot_sequence(&bundle, &cfg, args, s)?
                        .into_iter()
                        .map(|(b, _)| b)
                        .collect();
                    io::write_sot_json(&output, &boxes)
                }
            }
        })();
        let elapsed = args
            .record_timing
            .then(|| start.elapsed().as_secs_f64() * 1e3);
        match result {
            Ok(()) => {
                log::info!("{name}: {frames} frames");
                SequenceStatus {
                    name,
                    input: dir.clone(),
                    output,
                    status: "ok".into(),
                    error: None,
                    frames,
                    elapsed_ms: elapsed,
                }
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                let _ = fs::remove_file(&output);
                SequenceStatus {
                    name,
                    input: dir.clone(),
                    output,
                    status: "failed".into(),
                    error: Some(e.to_string()),
                    frames,
                    elapsed_ms: elapsed,
                }
            }
        }
    })?;
    let all_ok = statuses.iter().all(|s| s.status == "ok");
    let manifest = RunManifest {
        mode,
        inputs: vec![args.input.clone()],
        config_path: cli.config.clone(),
        overrides,
        config: cfg,
        output_dir: out.to_path_buf(),
        sequences: statuses,
    };
    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(if all_ok { 0 } else { 1 })
}

/// Directories holding a ground-truth file: `root` itself or its subdirectories.
fn discover_gt(root: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if !root.exists() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    let mut out = BTreeMap::new();
    if root.join(io::GT_FILE).is_file() {
        out.insert(io::sequence_name(root), root.to_path_buf());
        return Ok(out);
    }
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.join(io::GT_FILE).is_file() {
            out.insert(io::sequence_name(&p), p);
        }
    }
    Ok(out)
}

fn discover_files(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file()
            && p.extension().is_some_and(|e| e == ext)
            && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
        {
            if let Some(stem) = p.file_stem() {
                out.insert(stem.to_string_lossy().into_owned(), p);
            }
        }
    }
    Ok(out)
}

/// Pairs predictions with ground truth by sequence name; any name present
/// on one side only is an error.
fn align(
    pred: &BTreeMap<String, PathBuf>,
    gt: &BTreeMap<String, PathBuf>,
) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let p: BTreeSet<&String> = pred.keys().collect();
    let g: BTreeSet<&String> = gt.keys().collect();
    let only_pred: Vec<&str> = p.difference(&g).map(|s| s.as_str()).collect();
    let only_gt: Vec<&str> = g.difference(&p).map(|s| s.as_str()).collect();
    if !only_pred.is_empty() || !only_gt.is_empty() {
        return Err(Error::Config(format!(
            "sequence sets differ; predictions only: [{}]; ground truth only: [{}]",
            only_pred.join(", "),
            only_gt.join(", ")
        )));
    }
    if p.is_empty() {
        return Err(Error::EmptyInput("no sequences to evaluate"));
    }
    Ok(pred
        .iter()
        .map(|(n, pp)| (n.clone(), pp.clone(), gt[n].clone()))
        .collect())
}

fn gt_parse_options(dir: &Path) -> Result<ParseOptions> {
    let info_path = dir.join(io::SEQINFO_FILE);
    let frame_size = if info_path.is_file() {
        io::read_json::<io::SequenceInfo>(&info_path)?.frame_size()
    } else {
        None
    };
    Ok(ParseOptions {
        frame_size,
        drop_full_frame: true,
    })
}

fn frame_size_for_clip(dir: &Path) -> Result<(f64, f64)> {
    gt_parse_options(dir)?.frame_size.ok_or_else(|| {
        Error::Config(format!(
            "--clip needs the frame size from {}",
            dir.join(io::SEQINFO_FILE).display()
        ))
    })
}

#[derive(Debug, Clone, Serialize)]
struct SotSequenceReport {
    name: String,
    #[serde(flatten)]
    score: SotScore,
}

#[derive(Debug, Clone, Serialize)]
struct SotReport {
    sequences: Vec<SotSequenceReport>,
    mean_acc: f64,
}

/// Builds SOT records for one sequence. The target is the lowest ground-truth
/// id; `T` is the prediction length.
pub fn sot_records(pred: &[Option<BoundingBox>], gt: &[io::GtBox]) -> Result<Vec<SotFrameRecord>> {
    let target = gt.iter().map(|g| g.id).min();
    let by_frame: BTreeMap<u32, &io::GtBox> = gt
        .iter()
        .filter(|g| Some(g.id) == target)
        .map(|g| (g.frame, g))
        .collect();
    if let Some((&last, _)) = by_frame.last_key_value() {
        if last as usize > pred.len() {
            return Err(Error::Config(format!(
                "prediction covers {} frames but ground truth extends to frame {last}",
                pred.len()
            )));
        }
    }
    pred.iter()
        .enumerate()
        .map(|(i, p)| {
            let g = by_frame.get(&(i as u32 + 1));
            SotFrameRecord::new(*p, g.map(|g| g.bbox), g.is_some_and(|g| g.visible))
        })
        .collect()
}

fn write_report<T: Serialize>(cli: &Cli, name: &str, report: &T) -> Result<()> {
    if let Some(out) = &cli.out {
        create_dir(out)?;
        io::write_json(&out.join(name), report)?;
    }
    Ok(())
}

fn cmd_eval_sot(cli: &Cli, a: &EvalArgs) -> Result<i32> {
    let pairs = align(&discover_files(&a.pred, "json")?, &discover_gt(&a.gt)?)?;
    let scored = parallel_map(
        cli.jobs,
        &pairs,
        |(name, pp, gp)| -> Result<SotSequenceReport> {
            let mut pred = io::parse_sot_json(pp)?;
            let mut gt = io::parse_ground_truth(&gp.join(io::GT_FILE), &gt_parse_options(gp)?)?;
            if a.clip {
                let (w, h) = frame_size_for_clip(gp)?;
                pred.iter_mut().flatten().for_each(|b| *b = b.clip(w, h));
                gt.iter_mut().for_each(|g| g.bbox = g.bbox.clip(w, h));
            }
            let score = metrics::sot_accuracy(&sot_records(&pred, &gt)?)?;
            Ok(SotSequenceReport {
                name: name.clone(),
                score,
            })
        },
    )?;
    let sequences = scored.into_iter().collect::<Result<Vec<_>>>()?;
    let mean_acc = sequences.iter().map(|s| s.score.acc).sum::<f64>() / sequences.len() as f64;
    let report = SotReport {
        sequences,
        mean_acc,
    };
    let mut table = format!("{:<24} {:>6} {:>6} {:>10}\n", "sequence", "T", "T*", "acc");
    for s in &report.sequences {
        let _ = writeln!(
            table,
            "{:<24} {:>6} {:>6} {:>10.6}",
            s.name, s.score.frames, s.score.visible_frames, s.score.acc
        );
    }
    let _ = writeln!(
        table,
        "{:<24} {:>6} {:>6} {:>10.6}",
        "mean", "", "", report.mean_acc
    );
    print!("{table}");
    write_report(cli, "sot_report.json", &report)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct MotSequenceReport {
    name: String,
    #[serde(flatten)]
    report: MotaReport,
}

#[derive(Debug, Clone, Serialize)]
struct MotReport {
    sequences: Vec<MotSequenceReport>,
    average_mota: f64,
}

fn group_frames(items: impl Iterator<Item = (u32, u64, BoundingBox)>) -> BTreeMap<u32, FrameBoxes> {
    let mut out: BTreeMap<u32, FrameBoxes> = BTreeMap::new();
    for (f, id, b) in items {
        out.entry(f).or_default().push((id, b));
    }
    out
}

/// CLEAR-MOT counts for one sequence; invisible ground truth is ignored.
pub fn evaluate_mot(pred: &[TrackRow], gt: &[io::GtBox], iou_thresh: f64) -> Result<MotaReport> {
    let g = group_frames(
        gt.iter()
            .filter(|g| g.visible)
            .map(|g| (g.frame, g.id, g.bbox)),
    );
    let p = group_frames(pred.iter().map(|r| (r.frame, r.id, r.bbox)));
    MotaReport::try_from(&metrics::clear_match(&g, &p, iou_thresh)?)
}

fn cmd_eval_mot(cli: &Cli, a: &EvalArgs) -> Result<i32> {
    let pairs = align(&discover_files(&a.pred, "txt")?, &discover_gt(&a.gt)?)?;
    let scored = parallel_map(
        cli.jobs,
        &pairs,
        |(name, pp, gp)| -> Result<MotSequenceReport> {
            let mut pred = io::parse_tracks(pp)?;
            let mut gt = io::parse_ground_truth(&gp.join(io::GT_FILE), &gt_parse_options(gp)?)?;
            if a.clip {
                let (w, h) = frame_size_for_clip(gp)?;
                pred.iter_mut().for_each(|r| r.bbox = r.bbox.clip(w, h));
                gt.iter_mut().for_each(|g| g.bbox = g.bbox.clip(w, h));
            }
            Ok(MotSequenceReport {
                name: name.clone(),
                report: evaluate_mot(&pred, &gt, a.iou_thresh)?,
            })
        },
    )?;
    let sequences = scored.into_iter().collect::<Result<Vec<_>>>()?;
    let average_mota =
        metrics::average_mota(&sequences.iter().map(|s| s.report.mota).collect::<Vec<_>>())?;
    let report = MotReport {
        sequences,
        average_mota,
    };
    let mut table = format!(
        "{:<24} {:>7} {:>7} {:>7} {:>7} {:>10}\n",
        "sequence", "GT", "FP", "FN", "IDS", "MOTA"
    );
    for s in &report.sequences {
        let r = &s.report;
        let _ = writeln!(
            table,
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>10.6}",
            s.name, r.gt, r.fp, r.fn_, r.ids, r.mota
        );
    }
    let _ = writeln!(table, "{:<24} {:>39.6}", "average", report.average_mota);
    print!("{table}");
    write_report(cli, "mot_report.json", &report)?;
    Ok(0)
}

fn cmd_interp(cli: &Cli, a: &InterpArgs) -> Result<i32> {
    let out = out_dir(cli)?;
    let files: Vec<PathBuf> = if a.input.is_dir() {
        discover_files(&a.input, "txt")?.into_values().collect()
    } else {
        vec![a.input.clone()]
    };
    create_dir(out)?;
    let results = parallel_map(cli.jobs, &files, |p| -> Result<()> {
        let rows = io::parse_tracks(p)?;
        let name = p
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| "tracks.txt".into());
        io::write_tracks(
            &out.join(name),
            &postproc::interpolate_rows(&rows, a.max_gap),
        )
    })?;
    results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(0)
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> Result<i32> {
    let mut files = Vec::new();
    for p in &a.inputs {
        if p.is_dir() {
            files.extend(discover_gt(p)?.into_values().map(|d| d.join(io::GT_FILE)));
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            ));
        }
    }
    let opts = ParseOptions {
        frame_size: None,
        drop_full_frame: !a.keep_full_frame,
    };
    let stats = io::summarize_annotations(&files, &opts)?;
    println!(
        "sequences {}  frames {}  boxes {}",
        stats.sequences, stats.frames, stats.boxes
    );
    for (name, d) in [
        ("width", stats.width),
        ("height", stats.height),
        ("area", stats.area),
    ] {
        println!(
            "{name:<7} min {:>10.4}  max {:>10.4}  mean {:>10.4}  std {:>10.4}",
            d.min, d.max, d.mean, d.std
        );
    }
    write_report(cli, "stats.json", &stats)?;
    Ok(0)
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> Result<i32> {
    let out = out_dir(cli)?;
    let mut base: ScenarioConfig = match &a.scenario {
        Some(p) => io::read_json(p)?,
        None => ScenarioConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => {$( if let Some(v) = a.$f.clone() { base.$f = v; } )*};
    }
    set!(
        name,
        camera_velocity,
        n_objects,
        n_frames,
        miss_rate,
        fp_rate,
        position_jitter,
        size_jitter,
        embedding_dim,
        camera_jitter,
        background_points
    );
    if let Some(s) = cli.seed {
        base.seed = s;
    }
    base.validate()?;
    let jobs: Vec<ScenarioConfig> = (0..a.sequences)
        .map(|i| {
            let mut c = base.clone();
            if a.sequences > 1 {
                c.name = format!("{}-{:03}", base.name, i + 1);
                c.seed = base.seed.wrapping_add(i as u64);
            }
            c
        })
        .collect();
    let results = parallel_map(cli.jobs, &jobs, |c| -> Result<()> {
        let bundle = synth::generate(c)?;
        io::write_sequence(&out.join(&c.name), &bundle)
    })?;
    results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(0)
}

fn estimate_gmc_file(path: &Path, params: &RansacParams) -> Result<GmcMap> {
    let corr = crate::cmc::load_correspondences(path)?;
    let mut map = GmcMap::default();
    // frames without correspondences (the first one at least) are identity
    let last = corr.keys().next_back().copied().unwrap_or(0);
    for frame in 1..=last {
        map.transforms.insert(frame, AffineTransform::identity());
    }
    for (frame, pairs) in corr {
        match estimate_affine_ransac(&pairs, params) {
            Ok(r) => {
                map.transforms.insert(frame, r.transform);
            }
            Err(e @ (Error::DegenerateInput(_) | Error::NonFinite(_))) => {
                log::warn!("{}: frame {frame}: {e}; using identity", path.display());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(map)
}

fn cmd_gmc_estimate(cli: &Cli, a: &GmcArgs) -> Result<i32> {
    let out = out_dir(cli)?;
    let params = RansacParams {
        iterations: a.iterations,
        inlier_thresh: a.inlier_thresh,
        seed: cli.seed.unwrap_or(0),
    };
    let jobs: Vec<(PathBuf, PathBuf)> = if a.input.is_file() {
        vec![(a.input.clone(), out.join(io::GMC_FILE))]
    } else if a.input.join(io::CORR_FILE).is_file() {
        vec![(a.input.join(io::CORR_FILE), out.join(io::GMC_FILE))]
    } else if a.input.is_dir() {
        let mut v = Vec::new();
        for entry in fs::read_dir(&a.input).map_err(|e| Error::io(&a.input, e))? {
            let p = entry.map_err(|e| Error::io(&a.input, e))?.path();
            if p.join(io::CORR_FILE).is_file() {
                v.push((
                    p.join(io::CORR_FILE),
                    out.join(io::sequence_name(&p)).join(io::GMC_FILE),
                ));
            }
        }
        v.sort();
        v
    } else {
        return Err(Error::io(
            &a.input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    };
    create_dir(out)?;
    let results = parallel_map(cli.jobs, &jobs, |(src, dst)| -> Result<()> {
        write_gmc(dst, &estimate_gmc_file(src, &params)?)
    })?;
    results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::GtBox;

    #[test]
    fn overrides_are_applied_and_recorded() {
        let o = TrackerOverrides {
            track_buffer: Some(60),
            with_reid: Some(true),
            ..Default::default()
        };
        let (cfg, given) = load_tracker_config(None, &o).unwrap();
        assert_eq!(cfg.track_buffer, 60);
        assert!(cfg.with_reid);
        assert_eq!(given.len(), 2);
        assert_eq!(given["track_buffer"], serde_json::json!(60));
    }

    #[test]
    fn invalid_override_rejected() {
        let o = TrackerOverrides {
            match_thresh: Some(2.0),
            ..Default::default()
        };
        assert!(load_tracker_config(None, &o).is_err());
    }

    #[test]
    fn sot_records_use_lowest_id_and_prediction_length() {
        let b = BoundingBox {
            x: 0.0,
            y: 0.0,
            w: 4.0,
            h: 4.0,
        };
        let gt = vec![
            GtBox {
                frame: 1,
                id: 3,
                bbox: b,
                visible: true,
            },
            GtBox {
                frame: 2,
                id: 3,
                bbox: b,
                visible: false,
            },
            GtBox {
                frame: 1,
                id: 9,
                bbox: b,
                visible: true,
            },
        ];
        let recs = sot_records(&[Some(b), None, None], &gt).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs[0].visible && !recs[1].visible && !recs[2].visible);
        assert!(sot_records(&[Some(b)], &gt).is_err());
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "uavtrack",
            "sot",
            "in",
            "--init-box",
            "1,2,3,4",
            "--with-reid",
            "--track-buffer",
            "60",
            "--out",
            "o",
        ])
        .unwrap();
        match cli.command {
            Command::Sot(s) => {
                assert_eq!(s.init_box, Some([1.0, 2.0, 3.0, 4.0]));
                assert_eq!(s.run.overrides.with_reid, Some(true));
                assert_eq!(s.run.overrides.track_buffer, Some(60));
            }
            _ => panic!("wrong subcommand"),
        }
        assert_eq!(cli.out, Some(PathBuf::from("o")));
    }
}
