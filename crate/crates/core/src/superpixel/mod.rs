//! Superpixel oversegmentation and the region graph built on top of it.

mod connectivity;
mod slic;

pub use connectivity::enforce_connectivity;
pub use slic::{slic_segment, SlicParams, SLIC_COLOR_SCALE};

use crate::error::{Error, Result};
use crate::imagecore::{FloatMap, LabImage};

/// Per-pixel superpixel ids in `[0, n)`, every id used at least once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    assignment: Vec<u32>,
    n: usize,
}

impl SuperpixelMap {
    /// Wraps an assignment whose ids already cover `[0, n)` exactly.
    pub fn new(width: usize, height: usize, assignment: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != assignment.len() {
            return Err(Error::DataLength {
                width,
                height,
                channels: 1,
                found: assignment.len(),
            });
        }
        let n = assignment.iter().max().map_or(0, |&m| m as usize + 1);
        let mut seen = vec![false; n];
        for &id in &assignment {
            seen[id as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::SuperpixelParams(format!("id {missing} has no pixels")));
        }
        Ok(Self {
            width,
            height,
            assignment,
            n,
        })
    }

    /// Accepts arbitrary ids and compacts them to `[0, n)` in order of first
    /// appearance in scan order.
    pub fn from_labels(width: usize, height: usize, labels: &[u32]) -> Result<Self> {
        let mut remap = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = remap.len() as u32;
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Self::new(width, height, assignment)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Number of superpixels.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.assignment[y * self.width + x]
    }

    /// Pixel count of each superpixel.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        for &id in &self.assignment {
            sizes[id as usize] += 1;
        }
        sizes
    }

    /// Visualization dump: each pixel holds `id / (n - 1)` (0 when n == 1).
    pub fn to_fmap(&self) -> FloatMap {
        let denom = (self.n.max(2) - 1) as f32;
        let data = self.assignment.iter().map(|&id| id as f32 / denom).collect();
        FloatMap::new(self.width, self.height, data).expect("ids scaled into [0, 1]")
    }
}

/// Undirected 4-adjacency between superpixels. Edges are stored once with
/// `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl Adjacency {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }
}

pub fn build_adjacency(sp: &SuperpixelMap) -> Adjacency {
    let (w, h) = sp.dims();
    let a = sp.assignment();
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let here = a[y * w + x];
            if x + 1 < w {
                let right = a[y * w + x + 1];
                if right != here {
                    edges.push((here.min(right), here.max(right)));
                }
            }
            if y + 1 < h {
                let down = a[(y + 1) * w + x];
                if down != here {
                    edges.push((here.min(down), here.max(down)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Adjacency { n: sp.n(), edges }
}

/// Mean (L, a, b, M) per superpixel, all on the normalized [0, 1] scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    features: Vec<[f64; 4]>,
}

impl FeatureTable {
    pub fn new(features: Vec<[f64; 4]>) -> Self {
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[[f64; 4]] {
        &self.features
    }

    pub fn get(&self, i: usize) -> [f64; 4] {
        self.features[i]
    }
}

pub fn compute_features(sp: &SuperpixelMap, lab: &LabImage, m: &FloatMap) -> Result<FeatureTable> {
    if !lab.is_normalized() {
        return Err(Error::NotNormalized);
    }
    for found in [lab.dims(), m.dims()] {
        if found != sp.dims() {
            return Err(Error::DimensionMismatch {
                expected: sp.dims(),
                found,
            });
        }
    }
    let mut sums = vec![[0.0f64; 4]; sp.n()];
    let mut counts = vec![0usize; sp.n()];
    for ((&id, px), &mv) in sp.assignment().iter().zip(lab.data()).zip(m.data()) {
        let s = &mut sums[id as usize];
        s[0] += px[0];
        s[1] += px[1];
        s[2] += px[2];
        s[3] += mv as f64;
        counts[id as usize] += 1;
    }
    let features = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s.map(|v| (v / c as f64).clamp(0.0, 1.0)))
        .collect();
    Ok(FeatureTable { features })
}
