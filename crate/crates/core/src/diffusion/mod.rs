//! Gaussian affinity graph over adjacent superpixels and the seeded
//! random-walk diffusion solved on it.
//!
//! For one category the diffusion minimizes
//!
//! ```text
//! E(q) = 1/2 * sum_{i,j} z_ij (q_i - q_j)^2
//! ```
//!
//! with positive seeds clamped to 1 and competing seeds (other categories,
//! background) clamped to 0. The minimizer is harmonic at every unclamped
//! node: `q_i = sum_j z_ij q_j / sum_j z_ij`.

mod graph;
pub mod oracle;
mod solve;

pub use graph::{build_affinity, gaussian_affinity, AffinityGraph, AffinityNorm};
pub use oracle::{solve_diffusion_oracle, ORACLE_MAX_NODES};
pub use solve::{
    diffuse_all_classes, diffuse_all_classes_with, solve_diffusion, solve_jacobi, DiffusionMethod,
};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Nodes clamped to 1 and nodes clamped to 0 for one diffusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedAssignment {
    clamp_one: BTreeSet<usize>,
    clamp_zero: BTreeSet<usize>,
}

impl SeedAssignment {
    pub fn new(
        clamp_one: impl IntoIterator<Item = usize>,
        clamp_zero: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let clamp_one: BTreeSet<usize> = clamp_one.into_iter().collect();
        let clamp_zero: BTreeSet<usize> = clamp_zero.into_iter().collect();
        if clamp_one.is_empty() {
            return Err(Error::NoPositiveSeeds);
        }
        if let Some(&node) = clamp_one.intersection(&clamp_zero).next() {
            return Err(Error::OverlappingSeeds(node));
        }
        Ok(Self {
            clamp_one,
            clamp_zero,
        })
    }

    pub fn clamp_one(&self) -> &BTreeSet<usize> {
        &self.clamp_one
    }

    pub fn clamp_zero(&self) -> &BTreeSet<usize> {
        &self.clamp_zero
    }

    /// Clamp value of `node`, if clamped.
    pub fn clamp_value(&self, node: usize) -> Option<f64> {
        if self.clamp_one.contains(&node) {
            Some(1.0)
        } else if self.clamp_zero.contains(&node) {
            Some(0.0)
        } else {
            None
        }
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        match self.clamp_one.iter().chain(&self.clamp_zero).find(|&&i| i >= n) {
            Some(&node) => Err(Error::SeedOutOfRange { node, n }),
            None => Ok(()),
        }
    }
}

/// Result of one diffusion: the label vector plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    pub q: Vec<f64>,
    pub seeds: SeedAssignment,
    /// Largest harmonic defect `|q_i - sum_j z_ij q_j / d_i|` over unclamped nodes.
    pub residual: f64,
    pub iterations: usize,
    /// False only when an iterative solve stopped at its iteration limit.
    pub converged: bool,
}

impl DiffusionField {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// `1/2 * sum over ordered pairs (i, j)` of `z_ij (q_i - q_j)^2`, i.e. the sum
/// over undirected edges.
pub fn energy(g: &AffinityGraph, q: &[f64]) -> f64 {
    g.edges()
        .iter()
        .map(|&(i, j, z)| z * (q[i] - q[j]).powi(2))
        .sum()
}

/// Harmonic defect of every node; zero for clamped and isolated nodes.
pub fn harmonic_defects(g: &AffinityGraph, q: &[f64], seeds: &SeedAssignment) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let d = g.degree(i);
            if seeds.clamp_value(i).is_some() || d == 0.0 {
                return 0.0;
            }
            let avg = g.neighbors(i).iter().map(|&(j, z)| z * q[j]).sum::<f64>() / d;
            (q[i] - avg).abs()
        })
        .collect()
}

pub(crate) fn max_defect(g: &AffinityGraph, q: &[f64], seeds: &SeedAssignment) -> f64 {
    harmonic_defects(g, q, seeds).into_iter().fold(0.0, f64::max)
}
