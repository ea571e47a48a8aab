#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attnground_core::{BBox, OcrRecord};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_attnground")
}

/// Runs the binary with `ATTNGROUND_THREADS` set to `threads`.
pub fn run(args: &[&str], threads: usize) -> Output {
    Command::new(bin())
        .args(args)
        .env("ATTNGROUND_THREADS", threads.to_string())
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if dir.is_dir() {
        walk(dir, dir, &mut out);
    }
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Twenty OCR boxes on a 1000x1000 screen: a 5x4 lattice, one column of
/// which straddles x = 500.
pub fn ocg_boxes() -> Vec<OcrRecord> {
    (0..20)
        .map(|i| {
            let x = f64::from((i % 5) * 190 + 10);
            let y = f64::from((i / 5) * 240 + 20);
            OcrRecord {
                text: format!("item {i}"),
                bbox_px: BBox::new(x, y, x + 150.0, y + 40.0),
            }
        })
        .collect()
}

/// Writes `screen.png` (1000x1000) and `screen.json` into `dir`.
pub fn ocg_fixture(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let img = image::RgbImage::from_fn(1000, 1000, |x, y| image::Rgb([(x % 256) as u8, (y % 256) as u8, 128]));
    img.save(dir.join("screen.png")).unwrap();
    fs::write(dir.join("screen.json"), serde_json::to_string(&ocg_boxes()).unwrap()).unwrap();
}
