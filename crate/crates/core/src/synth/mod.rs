//! Synthetic attention dumps with a planted target.
//!
//! Each fixture has a hotspot cell and (usually) a decoy cell at Chebyshev
//! distance at least 2 from it. One visual query attends only to the hotspot
//! and one only to the decoy; the rest spread over the whole grid. For every
//! token, `head_count - noise_heads` "good" heads put mass in `[0.45, 0.6]`
//! on the hotspot query, and the noise heads put mass in `[0.25, 0.42]` on the
//! decoy query (or uniformly over all queries when there is no room for a
//! decoy). Good heads therefore always outrank noise heads, while a plain
//! mean over all heads can favour the decoy once noise heads dominate.
//!
//! Cross-attention rows are integer multiples of 2^-20 that sum to exactly
//! one, so they survive the cast to `f32` unchanged.
//!
//! The generator is ChaCha8 seeded from `seed`, with separate streams for the
//! layout, the cross-attention and the self-attention.

pub mod oracle;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{BBox, ElementType, GroundTruthElement, Platform};
use crate::tensor::{AttentionDump, CrossAttention, PatchGrid, SelfAttentionSlice, TokenRecord};

const UNIT: u32 = 1 << 20;

const GOOD_MASS: (f64, f64) = (0.45, 0.6);
const NOISE_MASS: (f64, f64) = (0.25, 0.42);

const WORDS: &[&str] = &[
    "Search", "artists", "albums", "and", "more", "Sign", "in", "Camera", "Settings", "Home", "Cart", "Menu", "Play",
    "Next", "Share", "Profile",
];

const STREAM_LAYOUT: u64 = 0;
const STREAM_CROSS: u64 = 1;
const STREAM_SELF: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub q_count: usize,
    pub head_count: usize,
    pub token_count: usize,
    pub rows_h: u32,
    pub cols_w: u32,
    pub patch_px: u32,
    /// Target cell `(x, y)`.
    pub hotspot: (u32, u32),
    /// Fraction of a good head's mass placed on the hotspot query.
    pub signal_strength: f64,
    pub noise_heads: usize,
    /// Decoy cell; picked from the seed when `None`.
    pub decoy: Option<(u32, u32)>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            q_count: 8,
            head_count: 10,
            token_count: 3,
            rows_h: 6,
            cols_w: 6,
            patch_px: 14,
            hotspot: (1, 1),
            signal_strength: 1.0,
            noise_heads: 0,
            decoy: None,
        }
    }
}

fn chebyshev(a: (u32, u32), b: (u32, u32)) -> u32 {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.q_count < 2 {
            return fail(format!("q_count {} < 2", self.q_count));
        }
        if self.head_count == 0 || self.token_count == 0 {
            return fail("head_count and token_count must be positive".into());
        }
        if self.rows_h == 0 || self.cols_w == 0 || self.patch_px == 0 {
            return fail("grid must be non-empty".into());
        }
        let inside = |c: (u32, u32)| c.0 < self.cols_w && c.1 < self.rows_h;
        if !inside(self.hotspot) {
            return fail(format!("hotspot {:?} outside {}x{} grid", self.hotspot, self.cols_w, self.rows_h));
        }
        if let Some(d) = self.decoy {
            if !inside(d) || chebyshev(d, self.hotspot) < 2 {
                return fail(format!("decoy {d:?} outside grid or touching the hotspot"));
            }
        }
        if !(self.signal_strength > 0.0 && self.signal_strength <= 1.0) {
            return fail(format!("signal_strength {} outside (0, 1]", self.signal_strength));
        }
        if self.noise_heads > self.head_count {
            return fail(format!("noise_heads {} > head_count {}", self.noise_heads, self.head_count));
        }
        Ok(())
    }

    pub fn grid(&self) -> PatchGrid {
        PatchGrid {
            rows_h: self.rows_h,
            cols_w: self.cols_w,
            patch_px: self.patch_px,
            image_w_px: self.cols_w * self.patch_px,
            image_h_px: self.rows_h * self.patch_px,
        }
    }

    pub fn sample_id(&self) -> String {
        format!("synth-{}", self.seed)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A random distribution over `n` cells made of multiples of `1 / UNIT`
/// summing to exactly one.
fn dyadic_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=1000u64)).collect();
    let total: u64 = weights.iter().sum();
    let mut counts: Vec<u32> = weights.iter().map(|w| (w * u64::from(UNIT) / total) as u32).collect();
    let rest = UNIT - counts.iter().sum::<u32>();
    let heaviest = (0..n).max_by_key(|&i| (weights[i], core::cmp::Reverse(i))).unwrap_or(0);
    counts[heaviest] += rest;
    counts.iter().map(|&c| c as f32 / UNIT as f32).collect()
}

/// Builds the fixture dump and the ground truth for its hotspot.
pub fn generate(spec: &SynthSpec) -> Result<(AttentionDump, GroundTruthElement)> {
    spec.validate()?;
    let grid = spec.grid();
    let cells = grid.cell_count();
    let (q, n, t) = (spec.q_count, spec.head_count, spec.token_count);

    let mut layout = stream(spec.seed, STREAM_LAYOUT);
    let decoy = spec.decoy.or_else(|| {
        let candidates: Vec<(u32, u32)> = (0..spec.rows_h)
            .flat_map(|y| (0..spec.cols_w).map(move |x| (x, y)))
            .filter(|&c| chebyshev(c, spec.hotspot) >= 2)
            .collect();
        candidates.choose(&mut layout).copied()
    });
    let mut queries: Vec<usize> = (0..q).collect();
    queries.shuffle(&mut layout);
    let (q_hot, q_decoy) = (queries[0], queries[1]);

    let mut rng = stream(spec.seed, STREAM_CROSS);
    let mut cross = Vec::with_capacity(q * cells);
    for qi in 0..q {
        let target = if qi == q_hot {
            Some(spec.hotspot)
        } else if qi == q_decoy {
            decoy
        } else {
            None
        };
        match target {
            Some((x, y)) => {
                let mut row = vec![0.0f32; cells];
                row[grid.index(x as usize, y as usize)] = 1.0;
                cross.extend_from_slice(&row);
            }
            None => cross.extend(dyadic_distribution(&mut rng, cells)),
        }
    }

    let mut rng = stream(spec.seed, STREAM_SELF);
    let mut values = vec![0.0f32; n * t * q];
    let mut heads: Vec<usize> = (0..n).collect();
    for token in 0..t {
        heads.shuffle(&mut rng);
        for (rank, &head) in heads.iter().enumerate() {
            let row = &mut values[(head * t + token) * q..(head * t + token + 1) * q];
            if rank < spec.noise_heads {
                let mass = rng.gen_range(NOISE_MASS.0..=NOISE_MASS.1);
                if decoy.is_some() {
                    row[q_decoy] = mass as f32;
                } else {
                    row.fill((mass / q as f64) as f32);
                }
            } else {
                let mass = rng.gen_range(GOOD_MASS.0..=GOOD_MASS.1);
                let hot = mass * spec.signal_strength;
                let spread = ((mass - hot) / (q - 1) as f64) as f32;
                row.fill(spread);
                row[q_hot] = hot as f32;
            }
        }
    }

    let mut tokens = Vec::with_capacity(t);
    let mut text = String::new();
    let mut pos = 0u64;
    for j in 0..t {
        let word = WORDS[layout.gen_range(0..WORDS.len())];
        let piece = if j == 0 { String::from(word) } else { format!(" {word}") };
        let len = piece.chars().count() as u64;
        tokens.push(TokenRecord {
            index: j as u64,
            text: piece.clone(),
            char_start: pos,
            char_end: pos + len,
        });
        text.push_str(&piece);
        pos += len;
    }

    let cross = CrossAttention::new(grid, q, cross)?;
    let slice = SelfAttentionSlice::new(n, t, q, values)?;
    let source = format!(
        "synth seed={} rng=chacha8 hotspot={},{} decoy={} noise_heads={} signal={}",
        spec.seed,
        spec.hotspot.0,
        spec.hotspot.1,
        decoy.map_or(String::from("none"), |d| format!("{},{}", d.0, d.1)),
        spec.noise_heads,
        spec.signal_strength
    );
    let dump = AttentionDump::new(cross, slice, tokens, None, source)?;

    let (x0, y0, x1, y1) = grid.cell_rect_px(spec.hotspot.0 as usize, spec.hotspot.1 as usize);
    let g = gcd(grid.image_w_px, grid.image_h_px);
    let gt = GroundTruthElement {
        sample_id: spec.sample_id(),
        image_ref: spec.sample_id(),
        query_text: text,
        bbox_px: BBox::new(x0, y0, x1, y1),
        element_type: ElementType::IconWidget,
        platform: Platform::Other,
        aspect_ratio: format!("{}:{}", grid.image_w_px / g, grid.image_h_px / g),
        image_w_px: Some(grid.image_w_px),
        image_h_px: Some(grid.image_h_px),
    };
    Ok((dump, gt))
}

/// Size limits for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceLimits {
    pub max_q: usize,
    pub max_heads: usize,
    pub max_tokens: usize,
    pub max_side: u32,
}

impl Default for InstanceLimits {
    fn default() -> Self {
        InstanceLimits {
            max_q: 8,
            max_heads: 16,
            max_tokens: 4,
            max_side: 8,
        }
    }
}

/// An unstructured valid dump: sparse row-stochastic cross-attention,
/// self-attention rows of random mass, occasional exactly tied heads and a
/// possibly partial last patch row and column.
pub fn random_instance(seed: u64, limits: &InstanceLimits) -> AttentionDump {
    let mut rng = stream(seed, STREAM_LAYOUT);
    let q = rng.gen_range(1..=limits.max_q.max(1));
    let n = rng.gen_range(1..=limits.max_heads.max(1));
    let t = rng.gen_range(1..=limits.max_tokens.max(1));
    let rows = rng.gen_range(1..=limits.max_side.max(1));
    let cols = rng.gen_range(1..=limits.max_side.max(1));
    let patch = rng.gen_range(1..=16u32);
    let w = (cols - 1) * patch + rng.gen_range(1..=patch);
    let h = (rows - 1) * patch + rng.gen_range(1..=patch);
    let grid = PatchGrid {
        rows_h: rows,
        cols_w: cols,
        patch_px: patch,
        image_w_px: w,
        image_h_px: h,
    };
    let cells = grid.cell_count();

    let mut cross = Vec::with_capacity(q * cells);
    for _ in 0..q {
        let keep = rng.gen_range(0.2..=1.0f64);
        let mut mask: Vec<bool> = (0..cells).map(|_| rng.gen_bool(keep)).collect();
        if !mask.iter().any(|m| *m) {
            let i = rng.gen_range(0..cells);
            mask[i] = true;
        }
        let active: Vec<usize> = (0..cells).filter(|&i| mask[i]).collect();
        let dist = dyadic_distribution(&mut rng, active.len());
        let mut row = vec![0.0f32; cells];
        for (&i, v) in active.iter().zip(dist) {
            row[i] = v;
        }
        cross.extend(row);
    }

    let mut values = vec![0.0f32; n * t * q];
    for head in 0..n {
        for token in 0..t {
            let o = (head * t + token) * q;
            if head > 0 && rng.gen_bool(0.15) {
                let src = (rng.gen_range(0..head) * t + token) * q;
                values.copy_within(src..src + q, o);
                continue;
            }
            let raw: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum::<f64>().max(1e-12);
            let mass = rng.gen_range(0.05..=0.95);
            for (v, r) in values[o..o + q].iter_mut().zip(raw) {
                *v = (r / total * mass) as f32;
            }
        }
    }

    let tokens = (0..t)
        .map(|j| TokenRecord {
            index: j as u64,
            text: format!("t{j}"),
            char_start: 2 * j as u64,
            char_end: 2 * j as u64 + 2,
        })
        .collect();
    AttentionDump::new(
        CrossAttention::new(grid, q, cross).expect("cross shape"),
        SelfAttentionSlice::new(n, t, q, values).expect("self shape"),
        tokens,
        Some((q + t) as u64),
        format!("random seed={seed}"),
    )
    .expect("consistent shapes")
}
