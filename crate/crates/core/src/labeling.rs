//! Connected-component labeling on a binary patch grid.
//!
//! Two-pass union-find. Labels are numbered `1..=count` in the order each
//! component's first cell appears in a row-major scan; background is `0`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Which neighbours of a cell count as connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// N, S, E and W neighbours.
    #[default]
    Four,
    /// All eight neighbours.
    Eight,
}

impl Connectivity {
    pub fn from_neighbours(n: u8) -> Option<Self> {
        match n {
            4 => Some(Connectivity::Four),
            8 => Some(Connectivity::Eight),
            _ => None,
        }
    }

    pub fn neighbours(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Result of [`label_components`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    /// Row-major labels, `0` for background.
    pub labels: Vec<u32>,
    pub count: u32,
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels the `true` cells of a row-major `width x height` mask.
///
/// # Panics
/// Panics if `mask.len() != width * height`.
pub fn label_components(mask: &[bool], width: usize, height: usize, connectivity: Connectivity) -> Components {
    assert_eq!(mask.len(), width * height, "mask size does not match grid");
    let mut provisional = vec![0u32; mask.len()];
    // index 0 is the background sentinel
    let mut sets = DisjointSet { parent: vec![0] };

    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !mask[i] {
                continue;
            }
            // already-visited neighbours
            let mut seen = [0u32; 4];
            let mut n = 0;
            if x > 0 {
                seen[n] = provisional[i - 1];
                n += 1;
            }
            if y > 0 {
                seen[n] = provisional[i - width];
                n += 1;
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        seen[n] = provisional[i - width - 1];
                        n += 1;
                    }
                    if x + 1 < width {
                        seen[n] = provisional[i - width + 1];
                        n += 1;
                    }
                }
            }
            let mut label = 0;
            for &l in seen[..n].iter().filter(|&&l| l != 0) {
                if label == 0 {
                    label = l;
                } else {
                    sets.union(label, l);
                }
            }
            if label == 0 {
                label = sets.parent.len() as u32;
                sets.parent.push(label);
            }
            provisional[i] = label;
        }
    }

    // renumber roots by first appearance
    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut count = 0;
    let mut labels = provisional;
    for l in labels.iter_mut().filter(|l| **l != 0) {
        let root = sets.find(*l);
        if final_of_root[root as usize] == 0 {
            count += 1;
            final_of_root[root as usize] = count;
        }
        *l = final_of_root[root as usize];
    }

    Components {
        width,
        height,
        labels,
        count,
    }
}
