//! Attention tensor data model.
//!
//! Two tensors cross the model/engine boundary:
//!
//! - [`CrossAttention`]: head-averaged attention from each of the `Q` visual
//!   query tokens of the compression module to each of the `H*W` image
//!   patches. Row-stochastic.
//! - [`SelfAttentionSlice`]: per-head LLM self-attention from `T` text tokens
//!   to the `Q` visual query tokens, for all `N` heads (all layers flattened).
//!
//! Grid cells are flattened row-major, `cell = y * W + x`.
//!
//! Constructors only check shapes. Value invariants (ranges, row sums) are
//! checked by `validate`, which ingestion runs on every dump. Keeping them
//! apart lets analysis code build rescaled slices that are no longer
//! attention distributions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Current dump format version.
pub const FORMAT_VERSION: u32 = 1;

/// Tolerance on cross-attention row sums and self-attention row mass.
pub const ROW_SUM_TOL: f64 = 1e-3;

/// Entries within this distance outside `[0, 1]` are accepted and clamped.
pub const RANGE_TOL: f32 = 1e-6;

/// Patch grid geometry of the vision encoder input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub rows_h: u32,
    pub cols_w: u32,
    pub patch_px: u32,
    pub image_w_px: u32,
    pub image_h_px: u32,
}

impl PatchGrid {
    pub const DEFAULT_PATCH_PX: u32 = 14;

    pub fn new(rows_h: u32, cols_w: u32, patch_px: u32, image_w_px: u32, image_h_px: u32) -> Result<Self> {
        let grid = PatchGrid {
            rows_h,
            cols_w,
            patch_px,
            image_w_px,
            image_h_px,
        };
        grid.check()?;
        Ok(grid)
    }

    /// Smallest grid of `patch_px` patches covering a `w x h` image.
    pub fn covering(image_w_px: u32, image_h_px: u32, patch_px: u32) -> Result<Self> {
        if patch_px == 0 || image_w_px == 0 || image_h_px == 0 {
            return Err(Error::ShapeMismatch(format!(
                "cannot cover a {image_w_px}x{image_h_px} image with {patch_px}px patches"
            )));
        }
        Self::new(
            image_h_px.div_ceil(patch_px),
            image_w_px.div_ceil(patch_px),
            patch_px,
            image_w_px,
            image_h_px,
        )
    }

    /// Checks that the grid is non-empty and covers the image with at most one
    /// partial row and column.
    pub fn check(&self) -> Result<()> {
        if self.rows_h == 0 || self.cols_w == 0 || self.patch_px == 0 {
            return Err(Error::ShapeMismatch(format!(
                "grid {}x{} with {}px patches is empty",
                self.rows_h, self.cols_w, self.patch_px
            )));
        }
        let covers = |cells: u32, px: u32| {
            let p = u64::from(self.patch_px);
            let cells = u64::from(cells);
            let px = u64::from(px);
            cells * p >= px && px > (cells - 1) * p
        };
        if !covers(self.rows_h, self.image_h_px) || !covers(self.cols_w, self.image_w_px) {
            return Err(Error::ShapeMismatch(format!(
                "grid {}x{} of {}px patches does not tightly cover a {}x{} image",
                self.rows_h, self.cols_w, self.patch_px, self.image_w_px, self.image_h_px
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.rows_h as usize * self.cols_w as usize
    }

    pub fn width(&self) -> usize {
        self.cols_w as usize
    }

    pub fn height(&self) -> usize {
        self.rows_h as usize
    }

    /// Flat index of cell `(x, y)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.cols_w as usize + x
    }

    /// Inverse of [`PatchGrid::index`].
    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        let w = self.cols_w as usize;
        (cell % w, cell / w)
    }

    /// Pixel rectangle `(xmin, ymin, xmax, ymax)` of a cell, clipped to the
    /// image.
    pub fn cell_rect_px(&self, x: usize, y: usize) -> (f64, f64, f64, f64) {
        let p = f64::from(self.patch_px);
        let w = f64::from(self.image_w_px);
        let h = f64::from(self.image_h_px);
        (
            (x as f64 * p).min(w),
            (y as f64 * p).min(h),
            ((x + 1) as f64 * p).min(w),
            ((y + 1) as f64 * p).min(h),
        )
    }
}

fn check_unit_range(values: &[f32], tensor: &'static str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) {
            return Err(Error::InvariantViolation {
                tensor,
                index: i,
                detail: format!("entry {v} outside [0, 1]"),
            });
        }
    }
    Ok(())
}

fn clamp_unit(values: &mut [f32]) {
    for v in values {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Visual-query to image-patch attention, `Q x (H*W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossAttention {
    grid: PatchGrid,
    q_count: usize,
    values: Vec<f32>,
}

impl CrossAttention {
    pub fn new(grid: PatchGrid, q_count: usize, values: Vec<f32>) -> Result<Self> {
        grid.check()?;
        if q_count == 0 {
            return Err(Error::ShapeMismatch("cross attention needs q_count >= 1".into()));
        }
        let expected = q_count * grid.cell_count();
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "cross attention has {} values, expected {q_count}x{} = {expected}",
                values.len(),
                grid.cell_count()
            )));
        }
        Ok(CrossAttention {
            grid,
            q_count,
            values,
        })
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn cell_count(&self) -> usize {
        self.grid.cell_count()
    }

    /// Row-major `Q x (H*W)` values.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, q: usize) -> &[f32] {
        let n = self.cell_count();
        &self.values[q * n..(q + 1) * n]
    }

    /// Checks entry range and row stochasticity.
    pub fn validate(&self) -> Result<()> {
        check_unit_range(&self.values, "cross")?;
        for q in 0..self.q_count {
            let sum: f64 = self.row(q).iter().map(|&v| f64::from(v)).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvariantViolation {
                    tensor: "cross",
                    index: q * self.cell_count(),
                    detail: format!("row {q} sums to {sum}"),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn clamp_unit(&mut self) {
        clamp_unit(&mut self.values);
    }
}

/// Per-head text-token to visual-query attention, `N x T x Q` in C order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAttentionSlice {
    head_count: usize,
    token_count: usize,
    q_count: usize,
    values: Vec<f32>,
}

impl SelfAttentionSlice {
    pub fn new(head_count: usize, token_count: usize, q_count: usize, values: Vec<f32>) -> Result<Self> {
        if head_count == 0 || token_count == 0 || q_count == 0 {
            return Err(Error::ShapeMismatch(format!(
                "self attention shape [{head_count}, {token_count}, {q_count}] has an empty axis"
            )));
        }
        let expected = head_count * token_count * q_count;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "self attention has {} values, expected {head_count}x{token_count}x{q_count} = {expected}",
                values.len()
            )));
        }
        Ok(SelfAttentionSlice {
            head_count,
            token_count,
            q_count,
            values,
        })
    }

    pub fn head_count(&self) -> usize {
        self.head_count
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn offset(&self, head: usize, token: usize) -> usize {
        (head * self.token_count + token) * self.q_count
    }

    /// Attention of `head` from `token` to every visual query.
    pub fn row(&self, head: usize, token: usize) -> &[f32] {
        let o = self.offset(head, token);
        &self.values[o..o + self.q_count]
    }

    /// Restricts the slice to the given token positions, in the given order.
    pub fn select_tokens(&self, tokens: &[usize]) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("token selection"));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.token_count) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.token_count,
            });
        }
        let mut values = Vec::with_capacity(self.head_count * tokens.len() * self.q_count);
        for head in 0..self.head_count {
            for &t in tokens {
                values.extend_from_slice(self.row(head, t));
            }
        }
        Self::new(self.head_count, tokens.len(), self.q_count, values)
    }

    /// Every value multiplied by `factor`. The result is generally not a
    /// valid attention slice.
    pub fn scaled(&self, factor: f32) -> Self {
        SelfAttentionSlice {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..*self
        }
    }

    /// Checks entry range and that no (head, token) row carries more than
    /// unit mass.
    pub fn validate(&self) -> Result<()> {
        check_unit_range(&self.values, "self")?;
        for head in 0..self.head_count {
            for token in 0..self.token_count {
                let sum: f64 = self.row(head, token).iter().map(|&v| f64::from(v)).sum();
                if sum > 1.0 + ROW_SUM_TOL {
                    return Err(Error::InvariantViolation {
                        tensor: "self",
                        index: self.offset(head, token),
                        detail: format!("head {head} token {token} has mass {sum}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn clamp_unit(&mut self) {
        clamp_unit(&mut self.values);
    }
}

/// One text token of the slice with its place in the detokenized text.
/// Character offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub index: u64,
    pub text: String,
    pub char_start: u64,
    pub char_end: u64,
}

/// Checks `char_start < char_end` and that records are ordered and disjoint.
pub fn check_token_records(tokens: &[TokenRecord]) -> Result<()> {
    for (i, t) in tokens.iter().enumerate() {
        if t.char_start >= t.char_end {
            return Err(Error::InvariantViolation {
                tensor: "tokens",
                index: i,
                detail: format!("empty character range {}..{}", t.char_start, t.char_end),
            });
        }
        if i > 0 && tokens[i - 1].char_end > t.char_start {
            return Err(Error::InvariantViolation {
                tensor: "tokens",
                index: i,
                detail: "records overlap or are out of order".into(),
            });
        }
    }
    Ok(())
}

/// Everything the grounding engine needs from one model run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDump {
    pub version: u32,
    pub cross: CrossAttention,
    pub self_slices: SelfAttentionSlice,
    pub tokens: Vec<TokenRecord>,
    pub m_total: Option<u64>,
    pub source: String,
}

impl AttentionDump {
    /// Assembles a dump, checking that the tensors and token list agree.
    pub fn new(
        cross: CrossAttention,
        self_slices: SelfAttentionSlice,
        tokens: Vec<TokenRecord>,
        m_total: Option<u64>,
        source: String,
    ) -> Result<Self> {
        if self_slices.q_count() != cross.q_count() {
            return Err(Error::ShapeMismatch(format!(
                "self attention has {} visual queries, cross attention {}",
                self_slices.q_count(),
                cross.q_count()
            )));
        }
        if self_slices.token_count() != tokens.len() {
            return Err(Error::ShapeMismatch(format!(
                "self attention covers {} tokens but {} token records given",
                self_slices.token_count(),
                tokens.len()
            )));
        }
        Ok(AttentionDump {
            version: FORMAT_VERSION,
            cross,
            self_slices,
            tokens,
            m_total,
            source,
        })
    }

    pub fn grid(&self) -> &PatchGrid {
        self.cross.grid()
    }

    /// Runs every value invariant.
    pub fn validate(&self) -> Result<()> {
        self.cross.validate()?;
        self.self_slices.validate()?;
        check_token_records(&self.tokens)
    }

    /// Validates, then snaps entries within tolerance of `[0, 1]` onto it.
    pub fn into_validated(mut self) -> Result<Self> {
        self.validate()?;
        self.cross.clamp_unit();
        self.self_slices.clamp_unit();
        Ok(self)
    }
}
