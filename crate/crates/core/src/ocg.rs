//! Optical-character-grounding dataset arithmetic: aspect-ratio crops of a
//! screenshot and the OCR boxes that survive them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{BBox, ElementType, GroundTruthElement, Platform};

/// Where the crop sits inside the screenshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    #[default]
    TopLeft,
}

/// A `width:height` aspect ratio to crop to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropSpec {
    pub ratio_w: u32,
    pub ratio_h: u32,
    #[serde(default)]
    pub anchor: Anchor,
}

impl CropSpec {
    pub fn new(ratio_w: u32, ratio_h: u32) -> Result<Self> {
        if ratio_w == 0 || ratio_h == 0 {
            return Err(Error::InvalidConfig(format!("ratio {ratio_w}:{ratio_h} has a zero side")));
        }
        Ok(CropSpec {
            ratio_w,
            ratio_h,
            anchor: Anchor::TopLeft,
        })
    }

    /// The ten OCG ratios, narrowest first.
    pub fn standard() -> Vec<CropSpec> {
        [(1, 4), (9, 21), (9, 19), (1, 2), (9, 16), (4, 3), (16, 9), (2, 1), (21, 9), (4, 1)]
            .iter()
            .map(|&(w, h)| CropSpec {
                ratio_w: w,
                ratio_h: h,
                anchor: Anchor::TopLeft,
            })
            .collect()
    }

    /// `"9:16"` style tag.
    pub fn tag(&self) -> String {
        format!("{}:{}", self.ratio_w, self.ratio_h)
    }
}

impl fmt::Display for CropSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ratio_w, self.ratio_h)
    }
}

impl FromStr for CropSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("ratio {s:?} is not of the form W:H"));
        let (w, h) = s.trim().split_once(':').ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        CropSpec::new(w, h)
    }
}

/// One OCR line on a source screenshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrRecord {
    pub text: String,
    #[serde(rename = "bbox")]
    pub bbox_px: BBox,
}

/// Largest crop of the requested ratio that fits the image, with floor
/// rounding on the scaled side.
pub fn crop_dims(image_w: u32, image_h: u32, spec: &CropSpec) -> Result<(u32, u32)> {
    let degenerate = || Error::DegenerateCrop {
        ratio: spec.tag(),
        width: image_w,
        height: image_h,
    };
    if image_w == 0 || image_h == 0 || spec.ratio_w == 0 || spec.ratio_h == 0 {
        return Err(degenerate());
    }
    let (w, h) = (u64::from(image_w), u64::from(image_h));
    let (rw, rh) = (u64::from(spec.ratio_w), u64::from(spec.ratio_h));
    // scale = min(w / rw, h / rh), compared without division
    let (cw, ch) = if w * rh <= h * rw {
        (w, w * rh / rw)
    } else {
        (h * rw / rh, h)
    };
    if cw == 0 || ch == 0 {
        return Err(degenerate());
    }
    Ok((cw as u32, ch as u32))
}

/// Crop rectangle in source-image pixels.
pub fn crop_rect(image_w: u32, image_h: u32, spec: &CropSpec) -> Result<BBox> {
    let (cw, ch) = crop_dims(image_w, image_h, spec)?;
    match spec.anchor {
        Anchor::TopLeft => Ok(BBox::new(0.0, 0.0, f64::from(cw), f64::from(ch))),
    }
}

/// Keeps the records lying entirely inside `crop` (edges inclusive) and moves
/// them into the crop's frame.
pub fn filter_boxes(records: &[OcrRecord], crop: &BBox) -> Vec<OcrRecord> {
    records
        .iter()
        .filter(|r| crop.contains_box(&r.bbox_px))
        .map(|r| OcrRecord {
            text: r.text.clone(),
            bbox_px: r.bbox_px.translated(-crop.xmin, -crop.ymin),
        })
        .collect()
}

/// Ground-truth records for one screenshot at one ratio.
///
/// Records with blank text or a degenerate box are skipped. Sample ids are
/// `{screen}@{ratio}#{n}` with `n` the record's position in the OCR list.
pub fn crop_samples(
    screen: &str,
    image_ref: &str,
    image_w: u32,
    image_h: u32,
    records: &[OcrRecord],
    spec: &CropSpec,
) -> Result<Vec<GroundTruthElement>> {
    let crop = crop_rect(image_w, image_h, spec)?;
    let (cw, ch) = crop_dims(image_w, image_h, spec)?;
    let tag = spec.tag();
    Ok(records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.text.trim().is_empty() && r.bbox_px.check().is_ok() && crop.contains_box(&r.bbox_px))
        .map(|(n, r)| GroundTruthElement {
            sample_id: format!("{screen}@{tag}#{n}"),
            image_ref: image_ref.into(),
            query_text: r.text.clone(),
            bbox_px: r.bbox_px.translated(-crop.xmin, -crop.ymin),
            element_type: ElementType::Text,
            platform: Platform::Web,
            aspect_ratio: tag.clone(),
            image_w_px: Some(cw),
            image_h_px: Some(ch),
        })
        .collect())
}
