use std::collections::BTreeMap;

use labelprop::diffusion::{AffinityGraph, SeedAssignment};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> AffinityGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = BTreeMap::new();
    for i in 1..n {
        let j = order[rng.random_range(0..i)];
        let (a, b) = (order[i].min(j), order[i].max(j));
        edges.insert((a, b), rng.random_range(0.05..=1.0));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.insert((a.min(b), a.max(b)), rng.random_range(0.05..=1.0));
        }
    }
    AffinityGraph::from_edges(n, edges.into_iter().map(|((a, b), z)| (a, b, z))).unwrap()
}

pub fn random_seeds(n: usize, rng: &mut ChaCha8Rng) -> SeedAssignment {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let ones = rng.random_range(1..=(n / 3).max(1));
    let zeros = rng.random_range(0..=(n / 3));
    SeedAssignment::new(nodes[..ones].to_vec(), nodes[ones..ones + zeros].to_vec()).unwrap()
}
