//! Element accuracy, grouped reports and `<box>` response parsing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::{self, Write as _};
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned pixel box. Serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox {
            xmin: v[0],
            ymin: v[1],
            xmax: v[2],
            ymax: v[3],
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.xmin, b.ymin, b.xmax, b.ymax]
    }
}

impl BBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BBox { xmin, ymin, xmax, ymax }
    }

    /// Finite with positive width and height.
    pub fn check(&self) -> Result<()> {
        let finite = [self.xmin, self.ymin, self.xmax, self.ymax].iter().all(|v| v.is_finite());
        if !finite || self.xmin >= self.xmax || self.ymin >= self.ymax {
            return Err(Error::InvalidBox(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.xmin >= self.xmin && other.ymin >= self.ymin && other.xmax <= self.xmax && other.ymax <= self.ymax
    }

    pub fn translated(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)
    }
}

/// Edges count as inside.
pub fn point_in_bbox(point: (f64, f64), bbox: &BBox) -> bool {
    let (x, y) = point;
    bbox.xmin <= x && x <= bbox.xmax && bbox.ymin <= y && y <= bbox.ymax
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementType {
    Text,
    IconWidget,
}

impl ElementType {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementType::Text => "text",
            ElementType::IconWidget => "icon_widget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Mobile,
    Desktop,
    Web,
    Other,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Mobile => "mobile",
            Platform::Desktop => "desktop",
            Platform::Web => "web",
            Platform::Other => "other",
        }
    }
}

/// One target element of a grounding benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthElement {
    pub sample_id: String,
    pub image_ref: String,
    pub query_text: String,
    pub bbox_px: BBox,
    pub element_type: ElementType,
    pub platform: Platform,
    pub aspect_ratio: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_w_px: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_h_px: Option<u32>,
}

impl GroundTruthElement {
    /// Box is valid and, when the image size is known, inside the image.
    pub fn validate(&self) -> Result<()> {
        self.bbox_px.check()?;
        let inside = self.bbox_px.xmin >= 0.0
            && self.bbox_px.ymin >= 0.0
            && self.image_w_px.is_none_or(|w| self.bbox_px.xmax <= f64::from(w))
            && self.image_h_px.is_none_or(|h| self.bbox_px.ymax <= f64::from(h));
        if !inside {
            return Err(Error::InvalidBox(format!(
                "sample {:?}: box {:?} outside image",
                self.sample_id, self.bbox_px
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_regions: Option<u32>,
    /// Grounded with all tokens because the description was not found.
    #[serde(default)]
    pub fallback: bool,
}

/// A predicted click point for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<PredictionMeta>,
}

impl Prediction {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// `platform-element_type`, e.g. `mobile-text`.
    PlatformType,
    AspectRatio,
    #[default]
    None,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "platform_type" => Ok(GroupBy::PlatformType),
            "aspect_ratio" => Ok(GroupBy::AspectRatio),
            "none" => Ok(GroupBy::None),
            other => Err(Error::InvalidConfig(format!("unknown grouping {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl GroupStats {
    fn finish(correct: usize, total: usize) -> Self {
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        GroupStats {
            correct,
            total,
            accuracy,
        }
    }
}

/// Accuracy per group plus the macro average over groups (the "Average"
/// column of the benchmark tables) and the pooled overall accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub group_by: GroupBy,
    #[serde(with = "ordered_groups")]
    pub groups: Vec<(String, GroupStats)>,
    pub average: f64,
    pub overall: f64,
    pub correct: usize,
    pub total: usize,
}

/// Groups serialize as a JSON object whose key order is the report order.
mod ordered_groups {
    use super::GroupStats;
    use alloc::string::String;
    use alloc::vec::Vec;
    use core::fmt;
    use serde::de::{MapAccess, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(groups: &[(String, GroupStats)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(groups.iter().map(|(k, v)| (k, v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, GroupStats)>, D::Error> {
        struct GroupsVisitor;

        impl<'de> Visitor<'de> for GroupsVisitor {
            type Value = Vec<(String, GroupStats)>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of group name to stats")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry()? {
                    out.push(entry);
                }
                Ok(out)
            }
        }

        d.deserialize_map(GroupsVisitor)
    }
}

fn parse_ratio(tag: &str) -> Option<(u64, u64)> {
    let (w, h) = tag.split_once(':')?;
    let w: u64 = w.trim().parse().ok()?;
    let h: u64 = h.trim().parse().ok()?;
    (w > 0 && h > 0).then_some((w, h))
}

/// Ratios ascending by width/height, unparsable tags last in lexical order.
fn cmp_ratio_tags(a: &str, b: &str) -> Ordering {
    match (parse_ratio(a), parse_ratio(b)) {
        (Some((aw, ah)), Some((bw, bh))) => (aw * bh).cmp(&(bw * ah)).then_with(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

/// Scores each ground-truth element by whether its prediction falls inside
/// the box. Samples without a prediction count as incorrect; predictions for
/// unknown samples are ignored.
pub fn evaluate(preds: &[Prediction], gts: &[GroundTruthElement], group_by: GroupBy) -> Result<EvalReport> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        if by_id.insert(p.sample_id.as_str(), p).is_some() {
            return Err(Error::DuplicatePrediction(p.sample_id.clone()));
        }
    }

    // (platform, element type) sort key lives alongside the label
    let mut counts: BTreeMap<(Option<(Platform, ElementType)>, String), (usize, usize)> = BTreeMap::new();
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    for gt in gts {
        gt.validate()?;
        if seen.insert(gt.sample_id.as_str(), ()).is_some() {
            return Err(Error::DuplicateGroundTruth(gt.sample_id.clone()));
        }
        let correct = by_id
            .get(gt.sample_id.as_str())
            .is_some_and(|p| p.is_finite() && point_in_bbox((p.x, p.y), &gt.bbox_px));
        let key = match group_by {
            GroupBy::PlatformType => (
                Some((gt.platform, gt.element_type)),
                format!("{}-{}", gt.platform.as_str(), gt.element_type.as_str()),
            ),
            GroupBy::AspectRatio => (None, gt.aspect_ratio.clone()),
            GroupBy::None => (None, "all".to_string()),
        };
        let entry = counts.entry(key).or_insert((0, 0));
        entry.0 += usize::from(correct);
        entry.1 += 1;
    }

    let mut groups: Vec<(String, GroupStats)> = counts
        .into_iter()
        .map(|((_, label), (c, t))| (label, GroupStats::finish(c, t)))
        .collect();
    if group_by == GroupBy::AspectRatio {
        groups.sort_by(|a, b| cmp_ratio_tags(&a.0, &b.0));
    }

    let correct = groups.iter().map(|g| g.1.correct).sum();
    let total = groups.iter().map(|g| g.1.total).sum();
    let average = if groups.is_empty() {
        0.0
    } else {
        groups.iter().map(|g| g.1.accuracy).sum::<f64>() / groups.len() as f64
    };
    Ok(EvalReport {
        group_by,
        groups,
        average,
        overall: GroupStats::finish(correct, total).accuracy,
        correct,
        total,
    })
}

impl EvalReport {
    /// Aligned plain-text table: one row per group, then Average and Overall.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<[String; 4]> = Vec::with_capacity(self.groups.len() + 3);
        rows.push(["group".into(), "correct".into(), "total".into(), "accuracy".into()]);
        for (name, g) in &self.groups {
            rows.push([
                name.clone(),
                g.correct.to_string(),
                g.total.to_string(),
                format!("{:.1}%", g.accuracy * 100.0),
            ]);
        }
        rows.push(["Average".into(), String::new(), String::new(), format!("{:.1}%", self.average * 100.0)]);
        rows.push([
            "Overall".into(),
            self.correct.to_string(),
            self.total.to_string(),
            format!("{:.1}%", self.overall * 100.0),
        ]);

        let mut widths = [0usize; 4];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for row in &rows {
            let _ = writeln!(
                out,
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// A `<box>` answer mapped back to image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsedBox {
    pub bbox: BBox,
    pub center: (f64, f64),
}

/// Coordinate range the model emits boxes in.
pub const BOX_SCALE: f64 = 1000.0;

/// Parses the first `<box>xmin ymin xmax ymax</box>` in a model response and
/// rescales it from the `[0, 1000]` range to a `width x height` image.
pub fn parse_box(text: &str, width: u32, height: u32) -> Result<ParsedBox> {
    const OPEN: &str = "<box>";
    const CLOSE: &str = "</box>";
    let start = text.find(OPEN).ok_or(Error::NoBoxFound)? + OPEN.len();
    let len = text[start..]
        .find(CLOSE)
        .ok_or_else(|| Error::MalformedBox("missing </box>".into()))?;
    let body = &text[start..start + len];

    let mut coords = [0.0f64; 4];
    let mut n = 0;
    for part in body.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()) {
        if n == 4 {
            return Err(Error::MalformedBox(format!("more than 4 values in {body:?}")));
        }
        let v: f64 = part
            .parse()
            .map_err(|_| Error::MalformedBox(format!("non-numeric value {part:?}")))?;
        if !v.is_finite() {
            return Err(Error::MalformedBox(format!("non-finite value {part:?}")));
        }
        coords[n] = v;
        n += 1;
    }
    if n != 4 {
        return Err(Error::MalformedBox(format!("expected 4 values, found {n} in {body:?}")));
    }

    let w = f64::from(width);
    let h = f64::from(height);
    let bbox = BBox::new(
        coords[0] * w / BOX_SCALE,
        coords[1] * h / BOX_SCALE,
        coords[2] * w / BOX_SCALE,
        coords[3] * h / BOX_SCALE,
    );
    Ok(ParsedBox {
        bbox,
        center: bbox.center(),
    })
}
