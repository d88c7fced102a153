use std::collections::{BTreeSet, VecDeque};

use super::SuperpixelMap;

/// Splits every label into its 4-connected components and merges components
/// smaller than `min_size` into their largest neighbouring region. Ids are
/// re-compacted in scan order.
pub fn enforce_connectivity(sp: &SuperpixelMap, min_size: usize) -> SuperpixelMap {
    repair(sp.width(), sp.height(), sp.assignment(), min_size, usize::MAX)
}

/// Labels 4-connected components of equal-valued pixels in scan order.
fn components(width: usize, height: usize, labels: &[u32]) -> (Vec<usize>, usize) {
    const UNSET: usize = usize::MAX;
    let mut comp = vec![UNSET; labels.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if comp[start] != UNSET {
            continue;
        }
        comp[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % width, i / width);
            let mut visit = |j: usize| {
                if comp[j] == UNSET && labels[j] == labels[i] {
                    comp[j] = count;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Connectivity repair shared by [`enforce_connectivity`] and SLIC. Regions
/// below `min_size` are absorbed smallest-first; afterwards, while more than
/// `max_regions` remain, the smallest region is absorbed as well. Ties pick
/// the lowest id.
pub(crate) fn repair(
    width: usize,
    height: usize,
    labels: &[u32],
    min_size: usize,
    max_regions: usize,
) -> SuperpixelMap {
    let (comp, count) = components(width, height, labels);

    let mut size = vec![0usize; count];
    for &c in &comp {
        size[c] += 1;
    }
    let mut neighbors = vec![BTreeSet::new(); count];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            for j in [(x + 1 < width).then(|| i + 1), (y + 1 < height).then(|| i + width)]
                .into_iter()
                .flatten()
            {
                let (a, b) = (comp[i], comp[j]);
                if a != b {
                    neighbors[a].insert(b);
                    neighbors[b].insert(a);
                }
            }
        }
    }

    // parent[c] == c for live regions
    let mut parent: Vec<usize> = (0..count).collect();
    let mut by_size: BTreeSet<(usize, usize)> = (0..count).map(|c| (size[c], c)).collect();
    let mut live = count;

    while let Some(&(s, c)) = by_size.first() {
        if live <= 1 || (s >= min_size && live <= max_regions) {
            break;
        }
        by_size.remove(&(s, c));
        let nbrs = std::mem::take(&mut neighbors[c]);
        let Some(&target) = nbrs.iter().max_by(|&&a, &&b| size[a].cmp(&size[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        by_size.remove(&(size[target], target));
        size[target] += s;
        by_size.insert((size[target], target));
        for &nb in &nbrs {
            neighbors[nb].remove(&c);
            if nb != target {
                neighbors[nb].insert(target);
                neighbors[target].insert(nb);
            }
        }
        parent[c] = target;
        live -= 1;
    }

    fn root(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }
    let merged: Vec<u32> = comp.iter().map(|&c| root(&mut parent, c) as u32).collect();
    SuperpixelMap::from_labels(width, height, &merged).expect("non-empty assignment")
}
