//! Attention-driven grounding: head selection, head aggregation, relevance
//! propagation, token averaging and region localization.
//!
//! All arithmetic runs in `f64` on top of the `f32` tensors. Every loop has a
//! fixed iteration order, so results are bit-for-bit reproducible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{label_components, Connectivity};
use crate::tensor::{AttentionDump, CrossAttention, PatchGrid, SelfAttentionSlice};

/// How the predicted point is derived from the winning region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    /// Mean of the member cells' pixel centers.
    #[default]
    Centroid,
    /// Center of the region's cell bounding box.
    BoxCenter,
    /// Center of the region's highest-relevance cell (first in scan order).
    PeakCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingConfig {
    /// Heads kept per token.
    pub top_k: usize,
    /// Foreground threshold on the (normalized) relevance map.
    pub delta: f64,
    pub connectivity: Connectivity,
    /// Divide the relevance map by its maximum before thresholding.
    pub normalize: bool,
    pub center: CenterMode,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            top_k: Self::DEFAULT_TOP_K,
            delta: Self::DEFAULT_DELTA,
            connectivity: Connectivity::Four,
            normalize: true,
            center: CenterMode::Centroid,
        }
    }
}

impl GroundingConfig {
    pub const DEFAULT_TOP_K: usize = 10;
    pub const DEFAULT_DELTA: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Binary per-token head weights and the head-mass scores they were ranked by.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSelection {
    head_count: usize,
    token_count: usize,
    /// `N x T`, index `head * T + token`.
    weights: Vec<bool>,
    scores: Vec<f64>,
    /// Heads selected per token, `min(k, N)`.
    pub effective_k: usize,
    /// Set when the requested `k` exceeded the head count.
    pub clamped: bool,
}

impl HeadSelection {
    pub fn head_count(&self) -> usize {
        self.head_count
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn is_selected(&self, head: usize, token: usize) -> bool {
        self.weights[head * self.token_count + token]
    }

    /// Total attention mass of `head` from `token` onto the visual queries.
    pub fn score(&self, head: usize, token: usize) -> f64 {
        self.scores[head * self.token_count + token]
    }

    /// Selected heads for `token`, ascending.
    pub fn selected_heads(&self, token: usize) -> Vec<usize> {
        (0..self.head_count).filter(|&h| self.is_selected(h, token)).collect()
    }
}

/// Ranks heads per token by their attention mass onto the visual queries and
/// keeps the top `k`. Equal scores go to the lower head index.
pub fn select_heads(slice: &SelfAttentionSlice, k: usize) -> Result<HeadSelection> {
    if k == 0 {
        return Err(Error::InvalidConfig("top_k must be at least 1".into()));
    }
    let n = slice.head_count();
    let t = slice.token_count();
    let effective_k = k.min(n);

    let mut scores = vec![0.0f64; n * t];
    for head in 0..n {
        for token in 0..t {
            scores[head * t + token] = slice.row(head, token).iter().map(|&v| f64::from(v)).sum();
        }
    }

    let mut weights = vec![false; n * t];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for token in 0..t {
        order.clear();
        order.extend(0..n);
        // stable: ties keep ascending head order
        order.sort_by(|&a, &b| scores[b * t + token].total_cmp(&scores[a * t + token]));
        for &head in &order[..effective_k] {
            weights[head * t + token] = true;
        }
    }

    Ok(HeadSelection {
        head_count: n,
        token_count: t,
        weights,
        scores,
        effective_k,
        clamped: k > n,
    })
}

/// Per-token attention onto the visual queries, averaged over selected heads.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedAttention {
    token_count: usize,
    q_count: usize,
    values: Vec<f64>,
}

impl AggregatedAttention {
    pub fn new(token_count: usize, q_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != token_count * q_count {
            return Err(Error::ShapeMismatch(format!(
                "aggregated attention has {} values, expected {token_count}x{q_count}",
                values.len()
            )));
        }
        Ok(AggregatedAttention {
            token_count,
            q_count,
            values,
        })
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn row(&self, token: usize) -> &[f64] {
        &self.values[token * self.q_count..(token + 1) * self.q_count]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Mean of the selected heads' rows for every token.
pub fn aggregate_heads(slice: &SelfAttentionSlice, sel: &HeadSelection) -> Result<AggregatedAttention> {
    if sel.head_count != slice.head_count() || sel.token_count != slice.token_count() {
        return Err(Error::ShapeMismatch(format!(
            "selection is {}x{} but slice is {}x{}",
            sel.head_count,
            sel.token_count,
            slice.head_count(),
            slice.token_count()
        )));
    }
    let q = slice.q_count();
    let mut values = vec![0.0f64; slice.token_count() * q];
    for token in 0..slice.token_count() {
        let out = &mut values[token * q..(token + 1) * q];
        let mut selected = 0usize;
        for head in 0..slice.head_count() {
            if !sel.is_selected(head, token) {
                continue;
            }
            selected += 1;
            for (acc, &v) in out.iter_mut().zip(slice.row(head, token)) {
                *acc += f64::from(v);
            }
        }
        let divisor = selected as f64;
        for acc in out.iter_mut() {
            *acc /= divisor;
        }
    }
    AggregatedAttention::new(slice.token_count(), q, values)
}

/// Per-patch relevance over the patch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    grid: PatchGrid,
    values: Vec<f64>,
    normalized: bool,
}

impl RelevanceMap {
    pub fn new(grid: PatchGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch(format!(
                "relevance map has {} values for {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvariantViolation {
                tensor: "relevance",
                index: i,
                detail: format!("value {} is negative or not finite", values[i]),
            });
        }
        Ok(RelevanceMap {
            grid,
            values,
            normalized: false,
        })
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    /// Row-major `H x W` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.grid.index(x, y)]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Divided by its maximum. An all-zero map stays all zero.
    pub fn normalized(&self) -> RelevanceMap {
        let max = self.max();
        let values = if max > 0.0 {
            self.values.iter().map(|v| v / max).collect()
        } else {
            self.values.clone()
        };
        RelevanceMap {
            grid: self.grid,
            values,
            normalized: true,
        }
    }
}

/// Pushes every token's aggregated attention through the cross-attention
/// map: `R_j[p] = sum_q agg[j, q] * cross[q, p]`.
pub fn propagate(agg: &AggregatedAttention, cross: &CrossAttention) -> Result<Vec<RelevanceMap>> {
    if agg.q_count() != cross.q_count() {
        return Err(Error::ShapeMismatch(format!(
            "aggregated attention has {} visual queries, cross attention {}",
            agg.q_count(),
            cross.q_count()
        )));
    }
    let cells = cross.cell_count();
    (0..agg.token_count())
        .map(|token| {
            let mut r = vec![0.0f64; cells];
            for (q, &w) in agg.row(token).iter().enumerate() {
                for (acc, &c) in r.iter_mut().zip(cross.row(q)) {
                    *acc += w * f64::from(c);
                }
            }
            RelevanceMap::new(*cross.grid(), r)
        })
        .collect()
}

/// Elementwise mean of per-token relevance maps.
pub fn average_tokens(maps: &[RelevanceMap]) -> Result<RelevanceMap> {
    let first = maps.first().ok_or(Error::EmptyInput("relevance maps"))?;
    if let Some(m) = maps.iter().find(|m| m.grid != first.grid) {
        return Err(Error::ShapeMismatch(format!(
            "relevance grids differ: {:?} vs {:?}",
            first.grid, m.grid
        )));
    }
    let mut values = vec![0.0f64; first.values.len()];
    for m in maps {
        for (acc, v) in values.iter_mut().zip(&m.values) {
            *acc += v;
        }
    }
    let t = maps.len() as f64;
    for v in values.iter_mut() {
        *v /= t;
    }
    RelevanceMap::new(first.grid, values)
}

/// The localized region and the point chosen inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingPrediction {
    pub x: f64,
    pub y: f64,
    /// Member cells `(x, y)` in row-major order.
    pub region_cells: Vec<(u32, u32)>,
    /// Mean relevance over the region, on the thresholded scale.
    pub region_score: f64,
    pub num_regions: u32,
}

/// Thresholds the map, labels connected regions and returns the center of the
/// region with the highest mean relevance.
pub fn localize(map: &RelevanceMap, cfg: &GroundingConfig) -> Result<GroundingPrediction> {
    cfg.validate()?;
    if !(map.max() > 0.0) {
        return Err(Error::AllZeroMap);
    }
    let scaled = if cfg.normalize { map.normalized() } else { map.clone() };
    let grid = map.grid;
    let (w, h) = (grid.width(), grid.height());

    let mask: Vec<bool> = scaled.values.iter().map(|&v| v >= cfg.delta).collect();
    let comps = label_components(&mask, w, h, cfg.connectivity);
    if comps.count == 0 {
        return Err(Error::EmptyForeground(cfg.delta));
    }

    let regions = comps.count as usize;
    let mut sums = vec![0.0f64; regions + 1];
    let mut counts = vec![0usize; regions + 1];
    for (&label, &v) in comps.labels.iter().zip(&scaled.values) {
        sums[label as usize] += v;
        counts[label as usize] += 1;
    }
    let mut best = 1usize;
    let mut best_mean = sums[1] / counts[1] as f64;
    for label in 2..=regions {
        let mean = sums[label] / counts[label] as f64;
        if mean > best_mean {
            best = label;
            best_mean = mean;
        }
    }

    let region_cells: Vec<(u32, u32)> = comps
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l as usize == best)
        .map(|(i, _)| {
            let (x, y) = grid.coords(i);
            (x as u32, y as u32)
        })
        .collect();

    let (x, y) = region_point(&region_cells, &scaled, cfg.center);
    Ok(GroundingPrediction {
        x,
        y,
        region_cells,
        region_score: best_mean,
        num_regions: comps.count,
    })
}

fn region_point(cells: &[(u32, u32)], map: &RelevanceMap, mode: CenterMode) -> (f64, f64) {
    let grid = &map.grid;
    let p = f64::from(grid.patch_px);
    // twice the center coordinate in cell units, so sums stay integral
    let (twice_x, twice_y, denom) = match mode {
        CenterMode::Centroid => {
            let sx: u64 = cells.iter().map(|&(x, _)| 2 * u64::from(x) + 1).sum();
            let sy: u64 = cells.iter().map(|&(_, y)| 2 * u64::from(y) + 1).sum();
            (sx, sy, cells.len() as u64)
        }
        CenterMode::BoxCenter => {
            let xmin = cells.iter().map(|c| c.0).min().unwrap_or(0);
            let xmax = cells.iter().map(|c| c.0).max().unwrap_or(0);
            let ymin = cells.iter().map(|c| c.1).min().unwrap_or(0);
            let ymax = cells.iter().map(|c| c.1).max().unwrap_or(0);
            (
                u64::from(xmin) + u64::from(xmax) + 1,
                u64::from(ymin) + u64::from(ymax) + 1,
                1,
            )
        }
        CenterMode::PeakCell => {
            let mut peak = cells[0];
            for &c in &cells[1..] {
                if map.get(c.0 as usize, c.1 as usize) > map.get(peak.0 as usize, peak.1 as usize) {
                    peak = c;
                }
            }
            (2 * u64::from(peak.0) + 1, 2 * u64::from(peak.1) + 1, 1)
        }
    };
    let x = twice_x as f64 * p / (2 * denom) as f64;
    let y = twice_y as f64 * p / (2 * denom) as f64;
    (
        x.clamp(0.0, f64::from(grid.image_w_px)),
        y.clamp(0.0, f64::from(grid.image_h_px)),
    )
}

/// Intermediate products of one grounding run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingTrace {
    pub selection: HeadSelection,
    /// Token-averaged relevance before normalization.
    pub relevance: RelevanceMap,
    pub prediction: GroundingPrediction,
}

/// Full pipeline on the given token positions of a dump.
pub fn ground_detailed(dump: &AttentionDump, token_indices: &[usize], cfg: &GroundingConfig) -> Result<GroundingTrace> {
    cfg.validate()?;
    let slice = dump.self_slices.select_tokens(token_indices)?;
    let selection = select_heads(&slice, cfg.top_k)?;
    let agg = aggregate_heads(&slice, &selection)?;
    let maps = propagate(&agg, &dump.cross)?;
    let relevance = average_tokens(&maps)?;
    let prediction = localize(&relevance, cfg)?;
    Ok(GroundingTrace {
        selection,
        relevance,
        prediction,
    })
}

pub fn ground(dump: &AttentionDump, token_indices: &[usize], cfg: &GroundingConfig) -> Result<GroundingPrediction> {
    ground_detailed(dump, token_indices, cfg).map(|t| t.prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::TokenRecord;
    use alloc::string::String;

    fn slice(n: usize, t: usize, q: usize, v: &[f32]) -> SelfAttentionSlice {
        SelfAttentionSlice::new(n, t, q, v.to_vec()).unwrap()
    }

    fn map(rows: usize, cols: usize, patch: u32, v: &[f64]) -> RelevanceMap {
        let grid = PatchGrid::new(rows as u32, cols as u32, patch, cols as u32 * patch, rows as u32 * patch).unwrap();
        RelevanceMap::new(grid, v.to_vec()).unwrap()
    }

    #[test]
    fn selects_highest_mass_heads() {
        // N=3, T=1, Q=2, per-head sums 0.9, 0.1, 0.5
        let s = slice(3, 1, 2, &[0.4, 0.5, 0.05, 0.05, 0.25, 0.25]);
        let sel = select_heads(&s, 2).unwrap();
        assert_eq!(sel.selected_heads(0), vec![0, 2]);
        assert!(!sel.clamped);
        assert!((sel.score(1, 0) - 0.1).abs() < 1e-7);
    }

    #[test]
    fn ties_prefer_lower_head_index() {
        let s = slice(4, 1, 1, &[0.3, 0.5, 0.3, 0.3]);
        assert_eq!(select_heads(&s, 2).unwrap().selected_heads(0), vec![0, 1]);
        assert_eq!(select_heads(&s, 3).unwrap().selected_heads(0), vec![0, 1, 2]);
    }

    #[test]
    fn ranking_is_per_token() {
        // N=2, T=2, Q=1: head 0 wins token 0, head 1 wins token 1
        let s = slice(2, 2, 1, &[0.9, 0.1, 0.2, 0.8]);
        let sel = select_heads(&s, 1).unwrap();
        assert_eq!(sel.selected_heads(0), vec![0]);
        assert_eq!(sel.selected_heads(1), vec![1]);
    }

    #[test]
    fn oversized_k_clamps() {
        let s = slice(2, 1, 1, &[0.1, 0.2]);
        let sel = select_heads(&s, 10).unwrap();
        assert!(sel.clamped);
        assert_eq!(sel.effective_k, 2);
        assert_eq!(sel.selected_heads(0), vec![0, 1]);
        assert!(select_heads(&s, 0).is_err());
    }

    #[test]
    fn single_selected_head_is_identity() {
        let s = slice(2, 1, 2, &[0.2, 0.8, 0.4, 0.0]);
        let sel = select_heads(&s, 1).unwrap();
        let agg = aggregate_heads(&s, &sel).unwrap();
        assert_eq!(agg.row(0), &[f64::from(0.2f32), f64::from(0.8f32)]);
    }

    #[test]
    fn aggregation_is_mean_of_selected() {
        let s = slice(2, 1, 2, &[0.2, 0.8, 0.4, 0.0]);
        let sel = select_heads(&s, 2).unwrap();
        let agg = aggregate_heads(&s, &sel).unwrap();
        assert!((agg.row(0)[0] - 0.3).abs() < 1e-7);
        assert!((agg.row(0)[1] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn identical_heads_aggregate_to_themselves() {
        let row = [0.125f32, 0.5, 0.25];
        let v: Vec<f32> = row.iter().copied().cycle().take(12).collect();
        let s = slice(4, 1, 3, &v);
        for k in 1..=4 {
            let agg = aggregate_heads(&s, &select_heads(&s, k).unwrap()).unwrap();
            assert_eq!(agg.row(0), &[0.125, 0.5, 0.25]);
        }
    }

    #[test]
    fn propagate_hand_product() {
        let grid = PatchGrid::new(1, 3, 1, 3, 1).unwrap();
        let cross = CrossAttention::new(grid, 2, vec![1.0, 0.0, 0.0, 0.0, 0.5, 0.5]).unwrap();
        let agg = AggregatedAttention::new(1, 2, vec![0.5, 0.5]).unwrap();
        let r = propagate(&agg, &cross).unwrap();
        assert_eq!(r[0].values(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn propagate_through_identity() {
        let grid = PatchGrid::new(2, 2, 1, 2, 2).unwrap();
        let mut id = vec![0.0f32; 16];
        for i in 0..4 {
            id[i * 4 + i] = 1.0;
        }
        let cross = CrossAttention::new(grid, 4, id).unwrap();
        let agg = AggregatedAttention::new(1, 4, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = propagate(&agg, &cross).unwrap();
        assert_eq!(r[0].values(), &[0.0, 1.0, 0.0, 0.0]);
        let bad = AggregatedAttention::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(propagate(&bad, &cross), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn average_of_maps() {
        let a = map(2, 2, 1, &[1.0, 0.0, 0.0, 0.0]);
        let b = map(2, 2, 1, &[0.0, 0.0, 0.0, 1.0]);
        let m = average_tokens(&[a.clone(), b]).unwrap();
        assert_eq!(m.values(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(average_tokens(core::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(average_tokens(&[]), Err(Error::EmptyInput("relevance maps")));
    }

    #[test]
    fn localize_two_by_two() {
        let m = map(2, 2, 14, &[1.0, 0.9, 0.2, 0.1]);
        let p = localize(&m, &GroundingConfig::default()).unwrap();
        assert_eq!(p.region_cells, vec![(0, 0), (1, 0)]);
        assert_eq!((p.x, p.y), (14.0, 7.0));
        assert_eq!(p.num_regions, 1);
        assert!((p.region_score - 0.95).abs() < 1e-12);
    }

    #[test]
    fn lone_cell_center() {
        let m = map(1, 1, 14, &[1.0]);
        let p = localize(&m, &GroundingConfig::default()).unwrap();
        assert_eq!((p.x, p.y), (7.0, 7.0));
    }

    #[test]
    fn highest_mean_region_wins_over_larger_region() {
        // region A: 0.6, 0.6, 0.6 (mean 0.6); region B: lone 1.0
        let m = map(1, 5, 10, &[0.6, 0.6, 0.6, 0.0, 1.0]);
        let p = localize(&m, &GroundingConfig::default()).unwrap();
        assert_eq!(p.region_cells, vec![(4, 0)]);
        assert_eq!(p.num_regions, 2);
    }

    #[test]
    fn equal_means_pick_first_region() {
        let m = map(1, 3, 10, &[1.0, 0.0, 1.0]);
        let p = localize(&m, &GroundingConfig::default()).unwrap();
        assert_eq!(p.region_cells, vec![(0, 0)]);
    }

    #[test]
    fn center_modes_on_l_shape() {
        // L: (0,0) (0,1) (1,1)
        let m = map(2, 2, 10, &[1.0, 0.0, 0.8, 0.9]);
        let mut cfg = GroundingConfig::default();
        let c = localize(&m, &cfg).unwrap();
        assert!((c.x - 25.0 / 3.0).abs() < 1e-12);
        assert!((c.y - 35.0 / 3.0).abs() < 1e-12);
        cfg.center = CenterMode::BoxCenter;
        let b = localize(&m, &cfg).unwrap();
        assert_eq!((b.x, b.y), (10.0, 10.0));
        cfg.center = CenterMode::PeakCell;
        let k = localize(&m, &cfg).unwrap();
        assert_eq!((k.x, k.y), (5.0, 5.0));
    }

    #[test]
    fn partial_edge_patch_is_clamped() {
        let grid = PatchGrid::new(1, 2, 14, 20, 10).unwrap();
        let m = RelevanceMap::new(grid, vec![0.0, 1.0]).unwrap();
        let p = localize(&m, &GroundingConfig::default()).unwrap();
        assert_eq!((p.x, p.y), (20.0, 7.0));
    }

    #[test]
    fn degenerate_maps() {
        let m = map(1, 2, 1, &[0.0, 0.0]);
        assert_eq!(localize(&m, &GroundingConfig::default()), Err(Error::AllZeroMap));
        let m = map(1, 2, 1, &[0.1, 0.2]);
        let cfg = GroundingConfig {
            normalize: false,
            ..Default::default()
        };
        assert_eq!(localize(&m, &cfg), Err(Error::EmptyForeground(0.5)));
    }

    #[test]
    fn config_bounds() {
        let mut cfg = GroundingConfig::default();
        assert_eq!((cfg.top_k, cfg.delta), (10, 0.5));
        cfg.delta = 1.0;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.0;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.5;
        cfg.top_k = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn one_hot_chain_lands_on_patch_center() {
        // Q=3, grid 2x3, p* = (2,1)
        let grid = PatchGrid::new(2, 3, 14, 42, 28).unwrap();
        let mut cross = vec![1.0f32 / 6.0; 18];
        for v in &mut cross[6..12] {
            *v = 0.0;
        }
        cross[6 + grid.index(2, 1)] = 1.0;
        let cross = CrossAttention::new(grid, 3, cross).unwrap();
        // N=2, T=1, both heads one-hot on q*=1
        let s = slice(2, 1, 3, &[0.0, 0.9, 0.0, 0.0, 0.7, 0.0]);
        let tokens = vec![TokenRecord {
            index: 0,
            text: "x".into(),
            char_start: 0,
            char_end: 1,
        }];
        let dump = AttentionDump::new(cross, s, tokens, None, String::new()).unwrap();
        let p = ground(&dump, &[0], &GroundingConfig::default()).unwrap();
        assert_eq!((p.x, p.y), (35.0, 21.0));
        assert!(matches!(
            ground(&dump, &[1], &GroundingConfig::default()),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }
}
