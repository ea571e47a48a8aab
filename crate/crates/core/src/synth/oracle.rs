//! Reference grounding written as plain nested loops.
//!
//! Shares no code with `grounding` or `labeling`: it reads the raw tensor
//! buffers, ranks heads by counting, and labels regions with a breadth-first
//! flood fill. Only the plain data types are common.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grounding::{CenterMode, GroundingConfig, GroundingPrediction};
use crate::labeling::Connectivity;
use crate::tensor::AttentionDump;

/// Token-averaged relevance (before normalization) for `token_indices`,
/// row-major over the grid.
pub fn oracle_relevance(dump: &AttentionDump, token_indices: &[usize], top_k: usize) -> Result<Vec<f64>> {
    if top_k == 0 {
        return Err(Error::InvalidConfig("top_k must be at least 1".into()));
    }
    if token_indices.is_empty() {
        return Err(Error::EmptyInput("token selection"));
    }
    let s = &dump.self_slices;
    let (n, t_all, q) = (s.head_count(), s.token_count(), s.q_count());
    for &j in token_indices {
        if j >= t_all {
            return Err(Error::IndexOutOfRange { index: j, len: t_all });
        }
    }
    let raw = s.values();
    let at = |k: usize, j: usize, qi: usize| f64::from(raw[(k * t_all + j) * q + qi]);

    let cross = dump.cross.values();
    let p_count = dump.grid().cell_count();

    let mut total = vec![0.0f64; p_count];
    for &j in token_indices {
        let mut score = vec![0.0f64; n];
        for (k, sk) in score.iter_mut().enumerate() {
            for qi in 0..q {
                *sk += at(k, j, qi);
            }
        }
        let mut chosen = vec![false; n];
        for k in 0..n {
            let mut rank = 0;
            for h in 0..n {
                if score[h] > score[k] || (score[h] == score[k] && h < k) {
                    rank += 1;
                }
            }
            chosen[k] = rank < top_k;
        }
        let used = chosen.iter().filter(|c| **c).count() as f64;

        let mut agg = vec![0.0f64; q];
        for (qi, a) in agg.iter_mut().enumerate() {
            for k in 0..n {
                if chosen[k] {
                    *a += at(k, j, qi);
                }
            }
            *a /= used;
        }

        let mut r = vec![0.0f64; p_count];
        for (p, rp) in r.iter_mut().enumerate() {
            for qi in 0..q {
                *rp += agg[qi] * f64::from(cross[qi * p_count + p]);
            }
        }
        for p in 0..p_count {
            total[p] += r[p];
        }
    }
    let t = token_indices.len() as f64;
    Ok(total.into_iter().map(|v| v / t).collect())
}

/// Flood-fill labeling, labels numbered in row-major order of each region's
/// first cell.
pub fn flood_fill_labels(mask: &[bool], width: usize, height: usize, connectivity: Connectivity) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; width * height];
    let mut next = 0u32;
    let steps: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    };
    for y0 in 0..height {
        for x0 in 0..width {
            if !mask[y0 * width + x0] || labels[y0 * width + x0] != 0 {
                continue;
            }
            next += 1;
            labels[y0 * width + x0] = next;
            let mut queue = VecDeque::from([(x0, y0)]);
            while let Some((x, y)) = queue.pop_front() {
                for &(dx, dy) in steps {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let i = ny as usize * width + nx as usize;
                    if mask[i] && labels[i] == 0 {
                        labels[i] = next;
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Same contract as `grounding::ground`.
pub fn oracle_ground(dump: &AttentionDump, token_indices: &[usize], cfg: &GroundingConfig) -> Result<GroundingPrediction> {
    if cfg.top_k == 0 || !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidConfig("top_k >= 1 and 0 < delta < 1 required".into()));
    }
    let relevance = oracle_relevance(dump, token_indices, cfg.top_k)?;
    let grid = dump.grid();
    let (w, h) = (grid.cols_w as usize, grid.rows_h as usize);

    let mut max = 0.0f64;
    for &v in &relevance {
        if v > max {
            max = v;
        }
    }
    if max <= 0.0 {
        return Err(Error::AllZeroMap);
    }
    let values: Vec<f64> = if cfg.normalize {
        relevance.iter().map(|v| v / max).collect()
    } else {
        relevance
    };
    let mask: Vec<bool> = values.iter().map(|&v| v >= cfg.delta).collect();
    let (labels, count) = flood_fill_labels(&mask, w, h, cfg.connectivity);
    if count == 0 {
        return Err(Error::EmptyForeground(cfg.delta));
    }

    let mut best = 0u32;
    let mut best_mean = f64::NEG_INFINITY;
    for label in 1..=count {
        let mut sum = 0.0;
        let mut cells = 0usize;
        for i in 0..w * h {
            if labels[i] == label {
                sum += values[i];
                cells += 1;
            }
        }
        let mean = sum / cells as f64;
        if mean > best_mean {
            best_mean = mean;
            best = label;
        }
    }

    let mut region = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if labels[y * w + x] == best {
                region.push((x as u32, y as u32));
            }
        }
    }

    let p = f64::from(grid.patch_px);
    let (cx, cy) = match cfg.center {
        CenterMode::Centroid => {
            let mut sx = 0u64;
            let mut sy = 0u64;
            for &(x, y) in &region {
                sx += 2 * u64::from(x) + 1;
                sy += 2 * u64::from(y) + 1;
            }
            let d = (2 * region.len()) as f64;
            (sx as f64 * p / d, sy as f64 * p / d)
        }
        CenterMode::BoxCenter => {
            let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
            for &(x, y) in &region {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
            (
                (u64::from(x0) + u64::from(x1) + 1) as f64 * p / 2.0,
                (u64::from(y0) + u64::from(y1) + 1) as f64 * p / 2.0,
            )
        }
        CenterMode::PeakCell => {
            let mut peak = region[0];
            for &(x, y) in &region {
                if values[y as usize * w + x as usize] > values[peak.1 as usize * w + peak.0 as usize] {
                    peak = (x, y);
                }
            }
            (
                (2 * u64::from(peak.0) + 1) as f64 * p / 2.0,
                (2 * u64::from(peak.1) + 1) as f64 * p / 2.0,
            )
        }
    };

    Ok(GroundingPrediction {
        x: cx.max(0.0).min(f64::from(grid.image_w_px)),
        y: cy.max(0.0).min(f64::from(grid.image_h_px)),
        region_cells: region,
        region_score: best_mean,
        num_regions: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flood_fill_small_cases() {
        let m = [true, false, true, false, true, false, true, false, true];
        assert_eq!(flood_fill_labels(&m, 3, 3, Connectivity::Four).1, 5);
        let (labels, count) = flood_fill_labels(&m, 3, 3, Connectivity::Eight);
        assert_eq!(count, 1);
        assert!(labels.iter().zip(&m).all(|(&l, &f)| (l == 1) == f));
    }
}
