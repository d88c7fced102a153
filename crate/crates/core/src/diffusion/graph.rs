use crate::error::{Error, Result};
use crate::superpixel::{Adjacency, FeatureTable};

/// How the feature distance enters the Gaussian affinity exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AffinityNorm {
    /// `exp(-||F_i - F_j|| / (2 sigma^2))`
    #[default]
    Linear,
    /// `exp(-||F_i - F_j||^2 / (2 sigma^2))`
    Squared,
}

impl std::str::FromStr for AffinityNorm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "squared" => Ok(Self::Squared),
            other => Err(format!("expected `linear` or `squared`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for AffinityNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Squared => "squared",
        })
    }
}

/// Sparse symmetric weighted graph. Weights lie in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    degrees: Vec<f64>,
    sigma: Option<f64>,
}

impl AffinityGraph {
    /// Builds a graph from undirected weighted edges. Self-loops, duplicate
    /// edges, out-of-range endpoints and weights outside (0, 1] are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, z) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if !(z > 0.0 && z <= 1.0) {
                return Err(Error::InvalidGraph(format!("weight {z} of edge ({a}, {b}) outside (0, 1]")));
            }
            list.push((a.min(b), a.max(b), z));
        }
        list.sort_by_key(|&(a, b, _)| (a, b));
        if let Some(w) = list.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }

        let mut counts = vec![0usize; n + 1];
        for &(a, b, _) in &list {
            counts[a + 1] += 1;
            counts[b + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0, 0.0); 2 * list.len()];
        for &(a, b, z) in &list {
            adjacency[fill[a]] = (b, z);
            fill[a] += 1;
            adjacency[fill[b]] = (a, z);
            fill[b] += 1;
        }
        for i in 0..n {
            adjacency[offsets[i]..offsets[i + 1]].sort_by_key(|&(j, _)| j);
        }
        let degrees = (0..n)
            .map(|i| adjacency[offsets[i]..offsets[i + 1]].iter().map(|&(_, z)| z).sum())
            .collect();
        Ok(Self {
            n,
            edges: list,
            offsets,
            adjacency,
            degrees,
            sigma: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected edges `(i, j, z)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Sum of incident edge weights.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let nb = self.neighbors(i);
        nb.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| nb[p].1)
    }

    /// Bandwidth used when the graph came from [`build_affinity`].
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }
}

/// Gaussian affinity for one feature distance. Underflow is floored at the
/// smallest positive normal f64 so every adjacency edge keeps a weight.
pub fn gaussian_affinity(distance: f64, sigma: f64, norm: AffinityNorm) -> f64 {
    let d = match norm {
        AffinityNorm::Linear => distance,
        AffinityNorm::Squared => distance * distance,
    };
    (-d / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
}

pub fn build_affinity(
    adj: &Adjacency,
    feats: &FeatureTable,
    sigma: f64,
    norm: AffinityNorm,
) -> Result<AffinityGraph> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if feats.len() != adj.n() {
        return Err(Error::LengthMismatch {
            expected: adj.n(),
            found: feats.len(),
        });
    }
    let edges = adj.edges().iter().map(|&(i, j)| {
        let (fi, fj) = (feats.get(i as usize), feats.get(j as usize));
        let dist = fi
            .iter()
            .zip(fj)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        (i as usize, j as usize, gaussian_affinity(dist, sigma, norm))
    });
    let mut g = AffinityGraph::from_edges(adj.n(), edges)?;
    g.sigma = Some(sigma);
    Ok(g)
}
