//! Batch grounding over a directory of dumps and one-parameter ablation sweeps.
//!
//! Layout: `DUMPS/<sample_id>/{header.json,tensors.bin}` for every record of
//! the ground-truth file.

use std::fmt::Write as _;
use std::path::Path;

use attnground_core::{
    evaluate, ground, select_span, AttentionDump, Error as CoreError, GroundTruthElement, GroundingConfig, GroupBy,
    Prediction, PredictionMeta,
};
use rayon::prelude::*;

use crate::dump::read_dump;
use crate::error::Result;

pub const CSV_HEADER: &str = "parameter,value,correct,total,accuracy";

/// A loaded sample: its dump and the tokens to ground.
pub struct Sample {
    pub gt: GroundTruthElement,
    pub dump: AttentionDump,
    pub tokens: Vec<usize>,
}

/// Token indices for a query: the matched span, or every token when the query
/// text does not occur in the dump's token stream.
pub fn query_tokens(dump: &AttentionDump, query: &str) -> Result<Vec<usize>> {
    match select_span(&dump.tokens, query) {
        Ok(span) => Ok(span.token_indices),
        Err(CoreError::NotFound | CoreError::EmptyInput(_)) => Ok((0..dump.tokens.len()).collect()),
        Err(e) => Err(e.into()),
    }
}

/// Loads every sample's dump in parallel, in ground-truth order.
pub fn load_samples(dumps: &Path, gts: &[GroundTruthElement]) -> Result<Vec<Sample>> {
    gts.par_iter()
        .map(|gt| {
            let dump = read_dump(dumps.join(&gt.sample_id))?;
            let tokens = query_tokens(&dump, &gt.query_text)?;
            Ok(Sample {
                gt: gt.clone(),
                dump,
                tokens,
            })
        })
        .collect()
}

/// Grounds every sample. A sample whose map has no usable foreground gets a
/// fallback prediction at the image center.
pub fn predict_all(samples: &[Sample], cfg: &GroundingConfig) -> Result<Vec<Prediction>> {
    samples
        .par_iter()
        .map(|s| match ground(&s.dump, &s.tokens, cfg) {
            Ok(p) => Ok(Prediction {
                sample_id: s.gt.sample_id.clone(),
                x: p.x,
                y: p.y,
                meta: Some(PredictionMeta {
                    region_score: Some(p.region_score),
                    num_regions: Some(p.num_regions),
                    fallback: false,
                }),
            }),
            Err(CoreError::AllZeroMap | CoreError::EmptyForeground(_)) => {
                let g = s.dump.grid();
                Ok(Prediction {
                    sample_id: s.gt.sample_id.clone(),
                    x: f64::from(g.image_w_px) / 2.0,
                    y: f64::from(g.image_h_px) / 2.0,
                    meta: Some(PredictionMeta {
                        region_score: None,
                        num_regions: Some(0),
                        fallback: true,
                    }),
                })
            }
            Err(e) => Err(e.into()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub value: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Varies one parameter at a time around `base`: first every `top_k`, then
/// every `delta`.
pub fn sweep(
    samples: &[Sample],
    gts: &[GroundTruthElement],
    base: &GroundingConfig,
    top_ks: &[usize],
    deltas: &[f64],
) -> Result<Vec<SweepRow>> {
    let configs = top_ks
        .iter()
        .map(|&k| ("top_k", k.to_string(), GroundingConfig { top_k: k, ..*base }))
        .chain(
            deltas
                .iter()
                .map(|&d| ("delta", d.to_string(), GroundingConfig { delta: d, ..*base })),
        );
    let mut rows = Vec::new();
    for (parameter, value, cfg) in configs {
        cfg.validate()?;
        let preds = predict_all(samples, &cfg)?;
        let report = evaluate(&preds, gts, GroupBy::None)?;
        rows.push(SweepRow {
            parameter,
            value,
            correct: report.correct,
            total: report.total,
            accuracy: report.overall,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{:.6}", r.parameter, r.value, r.correct, r.total, r.accuracy);
    }
    out
}
