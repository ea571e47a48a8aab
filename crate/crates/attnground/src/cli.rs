//! The `attnground` command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 description not
//! found (a fallback prediction is still written), 4 dump or schema error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use attnground_core::{
    evaluate, generate, ground, parse_box, select_span, CenterMode, Connectivity, CropSpec, Error as CoreError,
    GroundTruthElement, GroundingConfig, GroupBy, Prediction, PredictionMeta, SynthSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::dump::{read_dump, write_dump};
use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, write_json, write_jsonl};
use crate::ocg_build::{build_dataset, OcgBuildOptions};
use crate::sweep::{load_samples, sweep, to_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_DATA: i32 = 4;

pub const THREADS_ENV: &str = "ATTNGROUND_THREADS";

const AFTER_HELP: &str = "\
Dump directory layout:
  DIR/header.json   version, q_count, head_count, token_count, optional m_total,
                    grid {rows_h, cols_w, patch_px, image_w_px, image_h_px},
                    tokens [{index, text, char_start, char_end}],
                    tensors [{name, dtype, shape, offset_bytes, length_bytes}],
                    optional source
  DIR/tensors.bin   raw little-endian f32 payload
                    cross: shape [Q, H*W], rows sum to 1
                    self:  shape [N, T, Q], C order

Exit codes: 0 ok, 1 failure, 2 usage, 3 description not found, 4 dump/schema error.
Set ATTNGROUND_THREADS to cap parallelism.";

#[derive(Debug, Parser)]
#[command(name = "attnground", version, about = "Attention-based GUI grounding", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground one query in one dump and write a prediction.
    Ground(GroundArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Accuracy over a dataset of dumps while varying top-k or delta.
    Sweep(SweepArgs),
    /// Build OCG ground truth from screenshots and OCR boxes.
    OcgBuild(OcgBuildArgs),
    /// Write synthetic dumps with a planted target.
    Synth(SynthArgs),
    /// Rescale a `<box>` answer to pixel coordinates.
    ParseBox(ParseBoxArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CenterArg {
    Centroid,
    #[value(alias = "box-center")]
    BoxCenter,
    #[value(alias = "peak-cell")]
    PeakCell,
}

impl From<CenterArg> for CenterMode {
    fn from(c: CenterArg) -> Self {
        match c {
            CenterArg::Centroid => CenterMode::Centroid,
            CenterArg::BoxCenter => CenterMode::BoxCenter,
            CenterArg::PeakCell => CenterMode::PeakCell,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum GroupByArg {
    #[value(alias = "aspect-ratio")]
    AspectRatio,
    #[value(alias = "platform-type")]
    PlatformType,
    None,
}

impl From<GroupByArg> for GroupBy {
    fn from(g: GroupByArg) -> Self {
        match g {
            GroupByArg::AspectRatio => GroupBy::AspectRatio,
            GroupByArg::PlatformType => GroupBy::PlatformType,
            GroupByArg::None => GroupBy::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Heads kept per token.
    #[arg(long, default_value_t = GroundingConfig::DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Foreground threshold on the normalized relevance map.
    #[arg(long, default_value_t = GroundingConfig::DEFAULT_DELTA)]
    pub delta: f64,
    /// 4 or 8.
    #[arg(long, default_value_t = 4, value_parser = parse_connectivity)]
    pub connectivity: u8,
    #[arg(long, value_enum, default_value_t = CenterArg::Centroid)]
    pub center: CenterArg,
    /// Threshold the raw relevance map instead of the max-normalized one.
    #[arg(long)]
    pub no_normalize: bool,
}

impl LocalizeArgs {
    pub fn config(&self) -> GroundingConfig {
        GroundingConfig {
            top_k: self.top_k,
            delta: self.delta,
            connectivity: Connectivity::from_neighbours(self.connectivity).unwrap_or_default(),
            normalize: !self.no_normalize,
            center: self.center.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    #[arg(long)]
    pub dump: PathBuf,
    /// Text whose tokens are grounded; matched against the dump's tokens.
    #[arg(long, conflicts_with = "tokens")]
    pub description: Option<String>,
    /// Token range: `i..j` (half-open), `i..=j`, or a single index.
    /// Every token is used when neither this nor --description is given.
    #[arg(long, value_parser = parse_token_range)]
    pub tokens: Option<TokenRange>,
    #[command(flatten)]
    pub localize: LocalizeArgs,
    /// Defaults to the dump directory name.
    #[arg(long)]
    pub sample_id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupByArg::None)]
    pub group_by: GroupByArg,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory holding one dump per sample, named by sample id.
    #[arg(long)]
    pub dumps: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Comma-separated top-k values.
    #[arg(long, value_delimiter = ',')]
    pub top_k_list: Vec<usize>,
    /// Comma-separated delta values.
    #[arg(long, value_delimiter = ',')]
    pub delta_list: Vec<f64>,
    /// Fixed values for the parameter not being swept.
    #[command(flatten)]
    pub localize: LocalizeArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OcgBuildArgs {
    #[arg(long)]
    pub screens: PathBuf,
    /// OCR JSON directory; defaults to --screens.
    #[arg(long)]
    pub ocr: Option<PathBuf>,
    /// Comma-separated `W:H` ratios; defaults to the ten standard ones.
    #[arg(long, value_delimiter = ',', value_parser = parse_ratio)]
    pub ratios: Vec<CropSpec>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write cropped PNGs under OUT/crops.
    #[arg(long)]
    pub write_crops: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub q_count: usize,
    #[arg(long, default_value_t = 10)]
    pub heads: usize,
    #[arg(long, default_value_t = 3)]
    pub tokens: usize,
    #[arg(long, default_value_t = 6)]
    pub rows: u32,
    #[arg(long, default_value_t = 6)]
    pub cols: u32,
    #[arg(long, default_value_t = 14)]
    pub patch_px: u32,
    /// Target cell as `x,y`.
    #[arg(long, default_value = "1,1", value_parser = parse_cell)]
    pub hotspot: (u32, u32),
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_heads: usize,
    /// Decoy cell as `x,y`; picked per seed when omitted.
    #[arg(long, value_parser = parse_cell)]
    pub decoy: Option<(u32, u32)>,
}

impl SynthArgs {
    fn spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            seed,
            q_count: self.q_count,
            head_count: self.heads,
            token_count: self.tokens,
            rows_h: self.rows,
            cols_w: self.cols,
            patch_px: self.patch_px,
            hotspot: self.hotspot,
            signal_strength: self.signal,
            noise_heads: self.noise_heads,
            decoy: self.decoy,
        }
    }
}

#[derive(Debug, Args)]
pub struct ParseBoxArgs {
    /// Model answer containing `<box>xmin ymin xmax ymax</box>`.
    #[arg(long)]
    pub text: String,
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
}

/// Half-open token index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRange {
    pub start: usize,
    pub end: usize,
}

impl TokenRange {
    pub fn indices(&self) -> Vec<usize> {
        (self.start..self.end).collect()
    }
}

pub fn parse_token_range(s: &str) -> std::result::Result<TokenRange, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad token index {t:?}"));
    let (start, end) = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?, num(b)?.checked_add(1).ok_or("token index too large")?)
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?, num(b)?)
    } else {
        let i = num(s)?;
        (i, i + 1)
    };
    if start >= end {
        return Err(format!("empty token range {s:?}"));
    }
    Ok(TokenRange { start, end })
}

fn parse_connectivity(s: &str) -> std::result::Result<u8, String> {
    match s.trim() {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("connectivity must be 4 or 8, got {s:?}")),
    }
}

fn parse_ratio(s: &str) -> std::result::Result<CropSpec, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_cell(s: &str) -> std::result::Result<(u32, u32), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad cell coordinate {t:?}"));
    Ok((n(x)?, n(y)?))
}

/// Thread count from `ATTNGROUND_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(e) => Err(Error::Usage(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Dump(_) | Error::Schema { .. } | Error::MissingOcr { .. } => EXIT_DATA,
        Error::Core(c) => match c {
            CoreError::InvalidConfig(_) | CoreError::InvalidSpec(_) | CoreError::IndexOutOfRange { .. } => EXIT_USAGE,
            CoreError::NotFound => EXIT_NOT_FOUND,
            CoreError::ShapeMismatch(_)
            | CoreError::InvariantViolation { .. }
            | CoreError::OffsetInconsistency(_)
            | CoreError::DuplicatePrediction(_)
            | CoreError::DuplicateGroundTruth(_)
            | CoreError::InvalidBox(_)
            | CoreError::NoBoxFound
            | CoreError::MalformedBox(_) => EXIT_DATA,
            _ => EXIT_FAILURE,
        },
        Error::Image { .. } | Error::Io { .. } => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = threads_from_env().and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
        pool.install(|| dispatch(cli.command))
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Ground(a) => cmd_ground(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::OcgBuild(a) => cmd_ocg_build(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::ParseBox(a) => cmd_parse_box(&a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_ground(a: &GroundArgs) -> Result<i32> {
    let cfg = a.localize.config();
    cfg.validate()?;
    if let Some(d) = &a.description {
        if d.trim().is_empty() {
            return Err(Error::Usage("--description is empty".into()));
        }
    }

    let dump = read_dump(&a.dump)?;
    let all: Vec<usize> = (0..dump.tokens.len()).collect();
    let (tokens, fallback) = match (&a.description, a.tokens) {
        (Some(d), _) => match select_span(&dump.tokens, d) {
            Ok(span) => (span.token_indices, false),
            Err(CoreError::NotFound) => (all, true),
            Err(e) => return Err(e.into()),
        },
        (None, Some(r)) => {
            if r.end > dump.tokens.len() {
                return Err(Error::Usage(format!(
                    "token range {}..{} exceeds the dump's {} tokens",
                    r.start,
                    r.end,
                    dump.tokens.len()
                )));
            }
            (r.indices(), false)
        }
        (None, None) => (all, false),
    };

    let p = ground(&dump, &tokens, &cfg)?;
    let sample_id = match &a.sample_id {
        Some(id) => id.clone(),
        None => a
            .dump
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let pred = Prediction {
        sample_id,
        x: p.x,
        y: p.y,
        meta: Some(PredictionMeta {
            region_score: Some(p.region_score),
            num_regions: Some(p.num_regions),
            fallback,
        }),
    };
    write_json(&a.out, &pred)?;
    println!("point: {} {}", pred.x, pred.y);
    if fallback {
        eprintln!("error: description not found in the dump's tokens; grounded all tokens instead");
        return Ok(EXIT_NOT_FOUND);
    }
    Ok(EXIT_OK)
}

fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let preds: Vec<Prediction> = read_jsonl(&a.preds)?;
    let gts: Vec<GroundTruthElement> = read_jsonl(&a.gt)?;
    let report = evaluate(&preds, &gts, a.group_by.into())?;
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    print!("{report}");
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    if a.top_k_list.is_empty() && a.delta_list.is_empty() {
        return Err(Error::Usage("give --top-k-list and/or --delta-list".into()));
    }
    let base = a.localize.config();
    base.validate()?;
    for &k in &a.top_k_list {
        GroundingConfig { top_k: k, ..base }.validate()?;
    }
    for &d in &a.delta_list {
        GroundingConfig { delta: d, ..base }.validate()?;
    }

    let gts: Vec<GroundTruthElement> = read_jsonl(&a.gt)?;
    let samples = load_samples(&a.dumps, &gts)?;
    let rows = sweep(&samples, &gts, &base, &a.top_k_list, &a.delta_list)?;
    let csv = to_csv(&rows);
    match &a.out {
        Some(out) => write_text(out, &csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_ocg_build(a: &OcgBuildArgs) -> Result<i32> {
    let ratios = if a.ratios.is_empty() {
        CropSpec::standard()
    } else {
        a.ratios.clone()
    };
    let stats = build_dataset(&OcgBuildOptions {
        screens: a.screens.clone(),
        ocr: a.ocr.clone(),
        ratios,
        out: a.out.clone(),
        write_crops: a.write_crops,
    })?;
    print!("{}", stats.to_table());
    Ok(EXIT_OK)
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    if a.count == 0 {
        return Err(Error::Usage("--count must be at least 1".into()));
    }
    let last = a
        .seed
        .checked_add(a.count - 1)
        .ok_or_else(|| Error::Usage("seed range overflows".into()))?;
    a.spec(a.seed).validate()?;

    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let gts: Vec<GroundTruthElement> = (a.seed..=last)
        .into_par_iter()
        .map(|seed| {
            let spec = a.spec(seed);
            let (dump, gt) = generate(&spec)?;
            write_dump(&dump, a.out.join(&gt.sample_id))?;
            Ok(gt)
        })
        .collect::<Result<_>>()?;
    write_jsonl(a.out.join("ground_truth.jsonl"), &gts)?;
    println!("wrote {} synthetic dumps to {}", gts.len(), a.out.display());
    Ok(EXIT_OK)
}

fn cmd_parse_box(a: &ParseBoxArgs) -> Result<i32> {
    let p = parse_box(&a.text, a.width, a.height)?;
    let b = p.bbox;
    println!(
        "box: ({}, {}, {}, {}) center: ({}, {})",
        b.xmin, b.ymin, b.xmax, b.ymax, p.center.0, p.center.1
    );
    Ok(EXIT_OK)
}

