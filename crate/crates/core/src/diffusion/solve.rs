use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use super::{max_defect, AffinityGraph, DiffusionField, SeedAssignment};
use crate::error::{Error, Result};
use crate::imagecore::ClassId;

/// How a per-class diffusion is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionMethod {
    /// Exact minimizer with clamped seeds, via conjugate gradient.
    Clamped { tol: f64, max_iters: usize },
    /// Fixed number of `q <- D^-1 Z q` sweeps from zero, re-clamping seeds
    /// after every sweep.
    Jacobi { iters: usize },
}

/// Marks nodes that share a connected component with at least one clamp.
fn reaches_clamp(g: &AffinityGraph, seeds: &SeedAssignment) -> Vec<bool> {
    let mut reached = vec![false; g.n()];
    let mut queue: VecDeque<usize> = seeds.clamp_one().iter().chain(seeds.clamp_zero()).copied().collect();
    for &s in &queue {
        reached[s] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &(j, _) in g.neighbors(i) {
            if !reached[j] {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    reached
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetrically Jacobi-scaled reduced Laplacian `I - D^-1/2 Z_uu D^-1/2`
/// over the unknown nodes, stored row-wise.
struct ScaledSystem {
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl ScaledSystem {
    fn apply(&self, y: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let off: f64 = self.entries[self.offsets[i]..self.offsets[i + 1]]
                .iter()
                .map(|&(j, w)| w * y[j])
                .sum();
            *o = y[i] - off;
        }
    }
}

/// Minimizes the diffusion energy with the seeds clamped. Unclamped nodes in
/// a component without any clamp get 0.
///
/// The reduced Laplacian system is solved by conjugate gradient with
/// symmetric Jacobi scaling. Iteration stops once the largest harmonic
/// defect is at most `tol`. On hitting `max_iters` first, the partially
/// converged field is returned inside [`Error::NonConvergence`].
pub fn solve_diffusion(
    g: &AffinityGraph,
    seeds: &SeedAssignment,
    tol: f64,
    max_iters: usize,
) -> Result<DiffusionField> {
    seeds.check_range(g.n())?;
    let n = g.n();
    let reached = reaches_clamp(g, seeds);

    let mut q = vec![0.0; n];
    let mut index = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for i in 0..n {
        match seeds.clamp_value(i) {
            Some(v) => q[i] = v,
            None if reached[i] => {
                index[i] = unknowns.len();
                unknowns.push(i);
            }
            None => {}
        }
    }

    let m = unknowns.len();
    let scale: Vec<f64> = unknowns.iter().map(|&i| g.degree(i).sqrt()).collect();
    let mut rhs = vec![0.0; m];
    let mut offsets = Vec::with_capacity(m + 1);
    let mut entries = Vec::new();
    offsets.push(0);
    for (u, &i) in unknowns.iter().enumerate() {
        for &(j, z) in g.neighbors(i) {
            if index[j] != usize::MAX {
                entries.push((index[j], z / (scale[u] * scale[index[j]])));
            } else {
                rhs[u] += z * q[j];
            }
        }
        rhs[u] /= scale[u];
        offsets.push(entries.len());
    }
    let system = ScaledSystem { offsets, entries };

    let mut y = vec![0.0; m];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;

    let write_back = |y: &[f64], q: &mut [f64]| {
        for (u, &i) in unknowns.iter().enumerate() {
            q[i] = (y[u] / scale[u]).clamp(0.0, 1.0);
        }
    };
    // defect_i = |r_i| / sqrt(d_i) for the scaled residual r
    let estimate = |r: &[f64]| r.iter().zip(&scale).map(|(ri, s)| ri.abs() / s).fold(0.0, f64::max);

    let mut residual;
    loop {
        if estimate(&r) <= tol {
            write_back(&y, &mut q);
            residual = max_defect(g, &q, seeds);
            if residual <= tol {
                break;
            }
            // recursive residual drifted from the true one; restart from it
            system.apply(&y, &mut ap);
            for k in 0..m {
                r[k] = rhs[k] - ap[k];
            }
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
        }
        if iterations >= max_iters {
            write_back(&y, &mut q);
            residual = max_defect(g, &q, seeds);
            let field = DiffusionField {
                q,
                seeds: seeds.clone(),
                residual,
                iterations,
                converged: false,
            };
            return Err(Error::NonConvergence {
                residual,
                tol,
                iterations,
                field: Box::new(field),
            });
        }
        system.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            // breakdown; r is numerically zero in the scaled system
            write_back(&y, &mut q);
            residual = max_defect(g, &q, seeds);
            if residual <= tol {
                break;
            }
            iterations = max_iters;
            continue;
        }
        let alpha = rr / pap;
        for k in 0..m {
            y[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_next;
        iterations += 1;
    }

    Ok(DiffusionField {
        q,
        seeds: seeds.clone(),
        residual,
        iterations,
        converged: true,
    })
}

/// Finite-budget diffusion: starts from zero, applies `iters` Jacobi sweeps
/// `q_i <- sum_j z_ij q_j / d_i` and re-clamps the seeds after each sweep.
pub fn solve_jacobi(g: &AffinityGraph, seeds: &SeedAssignment, iters: usize) -> Result<DiffusionField> {
    seeds.check_range(g.n())?;
    let n = g.n();
    let clamp: Vec<Option<f64>> = (0..n).map(|i| seeds.clamp_value(i)).collect();
    let mut q: Vec<f64> = clamp.iter().map(|c| c.unwrap_or(0.0)).collect();
    let mut next = q.clone();
    for _ in 0..iters {
        for i in 0..n {
            next[i] = match clamp[i] {
                Some(v) => v,
                None if g.degree(i) > 0.0 => {
                    let s: f64 = g.neighbors(i).iter().map(|&(j, z)| z * q[j]).sum();
                    (s / g.degree(i)).clamp(0.0, 1.0)
                }
                None => 0.0,
            };
        }
        std::mem::swap(&mut q, &mut next);
    }
    let residual = max_defect(g, &q, seeds);
    Ok(DiffusionField {
        q,
        seeds: seeds.clone(),
        residual,
        iterations: iters,
        converged: true,
    })
}

/// Runs one clamped diffusion per class (see [`diffuse_all_classes_with`]).
pub fn diffuse_all_classes(
    g: &AffinityGraph,
    per_class: &BTreeMap<ClassId, SeedAssignment>,
    tol: f64,
    max_iters: usize,
) -> Result<BTreeMap<ClassId, DiffusionField>> {
    diffuse_all_classes_with(g, per_class, DiffusionMethod::Clamped { tol, max_iters })
}

/// One independent diffusion per class, run in parallel. Each class's zero
/// clamps are its own `clamp_zero` plus every other class's positive seeds.
///
/// A class whose solve hits the iteration limit keeps its partial field with
/// `converged == false`; any other error aborts.
pub fn diffuse_all_classes_with(
    g: &AffinityGraph,
    per_class: &BTreeMap<ClassId, SeedAssignment>,
    method: DiffusionMethod,
) -> Result<BTreeMap<ClassId, DiffusionField>> {
    if per_class.is_empty() {
        return Err(Error::InvalidActivations("no classes to diffuse".into()));
    }
    let jobs: Vec<(ClassId, SeedAssignment)> = per_class
        .iter()
        .map(|(&c, own)| {
            let rivals = per_class
                .iter()
                .filter(|(&d, _)| d != c)
                .flat_map(|(_, s)| s.clamp_one().iter().copied());
            let zeros: Vec<usize> = own.clamp_zero().iter().copied().chain(rivals).collect();
            SeedAssignment::new(own.clamp_one().iter().copied(), zeros).map(|s| (c, s))
        })
        .collect::<Result<_>>()?;

    let solved: Vec<(ClassId, Result<DiffusionField>)> = jobs
        .par_iter()
        .map(|(c, seeds)| {
            let field = match method {
                DiffusionMethod::Clamped { tol, max_iters } => match solve_diffusion(g, seeds, tol, max_iters) {
                    Err(Error::NonConvergence { field, .. }) => Ok(*field),
                    other => other,
                },
                DiffusionMethod::Jacobi { iters } => solve_jacobi(g, seeds, iters),
            };
            (*c, field)
        })
        .collect();
    solved.into_iter().map(|(c, f)| f.map(|f| (c, f))).collect()
}
