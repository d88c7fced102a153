//! Dense direct solver for small diffusion problems, used to cross-check the
//! iterative solver. It builds its own Laplacian from the edge list and does
//! not share code with [`super::solve_diffusion`].

use super::{max_defect, AffinityGraph, DiffusionField, SeedAssignment};
use crate::error::{Error, Result};

pub const ORACLE_MAX_NODES: usize = 200;

/// Gaussian elimination with partial pivoting; `a` is row-major `n x n`.
/// Returns `None` for a (numerically) singular matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (t, s) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *t -= f * s;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn solve_diffusion_oracle(g: &AffinityGraph, seeds: &SeedAssignment) -> Result<DiffusionField> {
    let n = g.n();
    if n > ORACLE_MAX_NODES {
        return Err(Error::TooLarge {
            n,
            max: ORACLE_MAX_NODES,
        });
    }
    seeds.check_range(n)?;

    // dense weight matrix straight from the edge list
    let mut w = vec![vec![0.0; n]; n];
    for &(i, j, z) in g.edges() {
        w[i][j] = z;
        w[j][i] = z;
    }

    // union-find components
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for &(i, j, _) in g.edges() {
        let (a, b) = (find(&mut comp, i), find(&mut comp, j));
        comp[a] = b;
    }
    let mut anchored = vec![false; n];
    for &s in seeds.clamp_one().iter().chain(seeds.clamp_zero()) {
        let r = find(&mut comp, s);
        anchored[r] = true;
    }

    let mut q = vec![0.0; n];
    let mut free = Vec::new();
    for i in 0..n {
        if let Some(v) = seeds.clamp_value(i) {
            q[i] = v;
        } else if anchored[find(&mut comp, i)] {
            free.push(i);
        }
    }

    // L_uu q_u = W_uc q_c
    let a: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| {
            free.iter()
                .map(|&j| if i == j { w[i].iter().sum() } else { -w[i][j] })
                .collect()
        })
        .collect();
    let b: Vec<f64> = free
        .iter()
        .map(|&i| {
            (0..n)
                .filter_map(|j| seeds.clamp_value(j).map(|v| w[i][j] * v))
                .sum()
        })
        .collect();
    let x = gauss_solve(a, b).ok_or_else(|| Error::InvalidGraph("singular reduced Laplacian".into()))?;
    for (&i, v) in free.iter().zip(x) {
        q[i] = v;
    }
    let residual = max_defect(g, &q, seeds);
    Ok(DiffusionField {
        q,
        seeds: seeds.clone(),
        residual,
        iterations: 0,
        converged: true,
    })
}
