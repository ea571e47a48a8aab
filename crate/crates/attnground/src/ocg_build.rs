//! Builds OCG ground-truth files from a directory of screenshots and their
//! OCR annotations.
//!
//! Input: `SCREENS/<name>.{png,jpg,jpeg}` and `OCR/<name>.json` (OCR defaults
//! to the screenshot directory), where the JSON is
//! `[{"text": ..., "bbox": [xmin, ymin, xmax, ymax]}, ...]`.
//!
//! Output, per requested ratio `W:H`: `OUT/ocg_WxH.jsonl`. Plus
//! `OUT/stats.json` and `OUT/stats.txt` with per-ratio sample counts, and with
//! `write_crops` the cropped images under `OUT/crops/`.

use std::fs;
use std::path::{Path, PathBuf};

use attnground_core::ocg::crop_samples;
use attnground_core::{crop_dims, CropSpec, Error as CoreError, GroundTruthElement, OcrRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{read_json, write_json, write_jsonl};

#[derive(Debug, Clone)]
pub struct OcgBuildOptions {
    pub screens: PathBuf,
    pub ocr: Option<PathBuf>,
    pub ratios: Vec<CropSpec>,
    pub out: PathBuf,
    pub write_crops: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioStats {
    pub ratio: String,
    pub records: usize,
    pub screenshots: usize,
    /// Screenshots too small for this ratio.
    pub skipped: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcgStats {
    pub screenshots: usize,
    pub ratios: Vec<RatioStats>,
    pub total_records: usize,
}

impl OcgStats {
    /// Two-row table, one column per ratio.
    pub fn to_table(&self) -> String {
        let mut head = vec!["ratio".to_string()];
        let mut counts = vec!["samples".to_string()];
        for r in &self.ratios {
            head.push(r.ratio.clone());
            counts.push(r.records.to_string());
        }
        let widths: Vec<usize> = head.iter().zip(&counts).map(|(a, b)| a.len().max(b.len())).collect();
        let row = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        format!("{}\n{}\n", row(&head), row(&counts))
    }
}

/// File stem used for a ratio, e.g. `ocg_9x16`.
pub fn ratio_file_stem(spec: &CropSpec) -> String {
    format!("ocg_{}x{}", spec.ratio_w, spec.ratio_h)
}

fn list_screenshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut shots = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            shots.push(path);
        }
    }
    shots.sort();
    Ok(shots)
}

struct Screen {
    path: PathBuf,
    stem: String,
    width: u32,
    height: u32,
    ocr: Vec<OcrRecord>,
}

fn load_screen(path: &Path, ocr_dir: &Path) -> Result<Screen> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Usage(format!("screenshot name {path:?} is not UTF-8")))?
        .to_string();
    let ocr_path = ocr_dir.join(format!("{stem}.json"));
    if !ocr_path.is_file() {
        return Err(Error::MissingOcr {
            screenshot: path.to_path_buf(),
            expected: ocr_path,
        });
    }
    let ocr: Vec<OcrRecord> = read_json(&ocr_path)?;
    let (width, height) = image::image_dimensions(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(Screen {
        path: path.to_path_buf(),
        stem,
        width,
        height,
        ocr,
    })
}

fn write_crop(screen: &Screen, spec: &CropSpec, out: &Path) -> Result<String> {
    let (cw, ch) = crop_dims(screen.width, screen.height, spec)?;
    let rel = format!("crops/{}_{}x{}.png", screen.stem, spec.ratio_w, spec.ratio_h);
    let img = image::open(&screen.path).map_err(|e| Error::Image {
        path: screen.path.clone(),
        message: e.to_string(),
    })?;
    let dest = out.join(&rel);
    img.crop_imm(0, 0, cw, ch).save(&dest).map_err(|e| Error::Image {
        path: dest.clone(),
        message: e.to_string(),
    })?;
    Ok(rel)
}

/// Per-screenshot, per-ratio samples; `None` where the crop degenerates.
fn screen_samples(screen: &Screen, opts: &OcgBuildOptions) -> Result<Vec<Option<Vec<GroundTruthElement>>>> {
    let file = screen.path.file_name().and_then(|f| f.to_str()).unwrap_or(&screen.stem);
    opts.ratios
        .iter()
        .map(|spec| {
            let (cw, ch) = match crop_dims(screen.width, screen.height, spec) {
                Ok(d) => d,
                Err(CoreError::DegenerateCrop { .. }) => {
                    eprintln!(
                        "warning: skipping {} at {}: crop degenerates on {}x{}",
                        file,
                        spec.tag(),
                        screen.width,
                        screen.height
                    );
                    return Ok(None);
                }
                Err(e) => return Err(e.into()),
            };
            let image_ref = if opts.write_crops {
                write_crop(screen, spec, &opts.out)?
            } else {
                format!("{file}#crop=0,0,{cw},{ch}")
            };
            let samples = crop_samples(&screen.stem, &image_ref, screen.width, screen.height, &screen.ocr, spec)?;
            Ok(Some(samples))
        })
        .collect()
}

/// Builds the dataset and writes every output file. Screenshots are processed
/// in parallel; outputs are assembled in sorted screenshot order.
pub fn build_dataset(opts: &OcgBuildOptions) -> Result<OcgStats> {
    if opts.ratios.is_empty() {
        return Err(Error::Usage("at least one ratio is required".into()));
    }
    let shots = list_screenshots(&opts.screens)?;
    let ocr_dir = opts.ocr.clone().unwrap_or_else(|| opts.screens.clone());
    fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    if opts.write_crops {
        let crops = opts.out.join("crops");
        fs::create_dir_all(&crops).map_err(|e| Error::io(&crops, e))?;
    }

    let per_screen: Vec<Vec<Option<Vec<GroundTruthElement>>>> = shots
        .par_iter()
        .map(|path| {
            let screen = load_screen(path, &ocr_dir)?;
            screen_samples(&screen, opts)
        })
        .collect::<Result<_>>()?;

    let mut ratios = Vec::with_capacity(opts.ratios.len());
    for (i, spec) in opts.ratios.iter().enumerate() {
        let mut records = Vec::new();
        let mut skipped = 0;
        for screen in &per_screen {
            match &screen[i] {
                Some(samples) => records.extend(samples.iter().cloned()),
                None => skipped += 1,
            }
        }
        let file = format!("{}.jsonl", ratio_file_stem(spec));
        write_jsonl(opts.out.join(&file), &records)?;
        ratios.push(RatioStats {
            ratio: spec.tag(),
            records: records.len(),
            screenshots: per_screen.len() - skipped,
            skipped,
            file,
        });
    }

    let stats = OcgStats {
        screenshots: per_screen.len(),
        total_records: ratios.iter().map(|r| r.records).sum(),
        ratios,
    };
    write_json(opts.out.join("stats.json"), &stats)?;
    let txt = opts.out.join("stats.txt");
    fs::write(&txt, stats.to_table()).map_err(|e| Error::io(&txt, e))?;
    Ok(stats)
}
