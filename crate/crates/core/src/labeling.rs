//! Seeds from activation maps, per-superpixel class fusion and rasterization
//! of the final label map.

use std::collections::{BTreeMap, BTreeSet};

use crate::diffusion::{DiffusionField, SeedAssignment};
use crate::error::{Error, Result};
use crate::imagecore::{ClassId, ClassTable, FloatMap, LabelMap};
use crate::superpixel::SuperpixelMap;

/// Per-class activation maps, sorted by class index. All maps share
/// dimensions and class indices are unique and non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    maps: Vec<(ClassId, FloatMap)>,
}

impl ActivationSet {
    pub fn new(mut maps: Vec<(ClassId, FloatMap)>) -> Result<Self> {
        let Some((_, first)) = maps.first() else {
            return Err(Error::InvalidActivations("no activation maps".into()));
        };
        let dims = first.dims();
        if let Some((_, m)) = maps.iter().find(|(_, m)| m.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: m.dims(),
            });
        }
        maps.sort_by_key(|(c, _)| *c);
        if maps[0].0 == 0 {
            return Err(Error::InvalidActivations("class 0 is background and cannot have an activation map".into()));
        }
        if let Some(w) = maps.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidActivations(format!("class {} given twice", w[0].0)));
        }
        Ok(Self { maps })
    }

    pub fn maps(&self) -> &[(ClassId, FloatMap)] {
        &self.maps
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.maps.iter().map(|(c, _)| *c)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].1.dims()
    }
}

/// Mean of `map` over each superpixel.
pub fn superpixel_means(sp: &SuperpixelMap, map: &FloatMap) -> Result<Vec<f64>> {
    if map.dims() != sp.dims() {
        return Err(Error::DimensionMismatch {
            expected: sp.dims(),
            found: map.dims(),
        });
    }
    let mut sums = vec![0.0f64; sp.n()];
    for (&id, &v) in sp.assignment().iter().zip(map.data()) {
        sums[id as usize] += v as f64;
    }
    Ok(sums
        .into_iter()
        .zip(sp.sizes())
        .map(|(s, c)| s / c as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedReport {
    /// Number of superpixels.
    pub n: usize,
    /// Positive seeds per class; `clamp_zero` holds the background seeds.
    pub per_class: BTreeMap<ClassId, SeedAssignment>,
    pub background_zeros: BTreeSet<usize>,
    /// Absolute activation threshold used for each class (`seed_frac * max mean`).
    pub thresholds: BTreeMap<ClassId, f64>,
    pub seed_frac: f64,
    pub bg_thresh: f64,
}

/// Picks seeds for every class and the background.
///
/// Superpixel `i` seeds class `c` when its mean activation reaches
/// `seed_frac` times the largest superpixel mean of `A^c`. A superpixel that
/// qualifies for several classes goes to the one with the higher mean (ties
/// to the lower index). It is a background seed when its mean of `m` is
/// below `bg_thresh` and it qualifies for no class.
pub fn extract_seeds(
    sp: &SuperpixelMap,
    acts: &ActivationSet,
    m: &FloatMap,
    seed_frac: f64,
    bg_thresh: f64,
) -> Result<SeedReport> {
    if !(seed_frac > 0.0 && seed_frac <= 1.0) {
        return Err(Error::InvalidThreshold {
            name: "seed_frac",
            value: seed_frac,
        });
    }
    if !(0.0..1.0).contains(&bg_thresh) {
        return Err(Error::InvalidThreshold {
            name: "bg_thresh",
            value: bg_thresh,
        });
    }
    let n = sp.n();
    let mask = superpixel_means(sp, m)?;

    let mut means = Vec::new();
    let mut thresholds = BTreeMap::new();
    for (c, map) in acts.maps() {
        let mu = superpixel_means(sp, map)?;
        let max = mu.iter().copied().fold(0.0, f64::max);
        thresholds.insert(*c, seed_frac * max);
        means.push((*c, max, mu));
    }

    let qualifies = |max: f64, mean: f64| max > 0.0 && mean >= seed_frac * max;

    let mut ones: BTreeMap<ClassId, BTreeSet<usize>> = acts.classes().map(|c| (c, BTreeSet::new())).collect();
    let mut background_zeros = BTreeSet::new();
    for i in 0..n {
        let mut best: Option<(ClassId, f64)> = None;
        for (c, max, mu) in &means {
            if qualifies(*max, mu[i]) && best.is_none_or(|(_, b)| mu[i] > b) {
                best = Some((*c, mu[i]));
            }
        }
        match best {
            Some((c, _)) => {
                ones.get_mut(&c).unwrap().insert(i);
            }
            None if mask[i] < bg_thresh => {
                background_zeros.insert(i);
            }
            None => {}
        }
    }

    let mut per_class = BTreeMap::new();
    for (c, seeds) in ones {
        if seeds.is_empty() {
            return Err(Error::NoSeedsForClass(c));
        }
        per_class.insert(c, SeedAssignment::new(seeds, background_zeros.iter().copied())?);
    }
    Ok(SeedReport {
        n,
        per_class,
        background_zeros,
        thresholds,
        seed_frac,
        bg_thresh,
    })
}

/// Assigns each superpixel the class with the largest diffused value when
/// that value reaches `accept_thresh`, otherwise background. Ties go to the
/// lower class index.
pub fn fuse_labels(
    fields: &BTreeMap<ClassId, DiffusionField>,
    report: &SeedReport,
    accept_thresh: f64,
) -> Result<Vec<ClassId>> {
    if !(0.0..1.0).contains(&accept_thresh) {
        return Err(Error::InvalidThreshold {
            name: "accept_thresh",
            value: accept_thresh,
        });
    }
    if fields.len() != report.per_class.len() || fields.keys().ne(report.per_class.keys()) {
        return Err(Error::InvalidActivations(
            "diffusion fields and seed report cover different classes".into(),
        ));
    }
    if let Some(f) = fields.values().find(|f| f.len() != report.n) {
        return Err(Error::LengthMismatch {
            expected: report.n,
            found: f.len(),
        });
    }
    Ok((0..report.n)
        .map(|i| {
            let mut best: Option<(ClassId, f64)> = None;
            for (&c, f) in fields {
                if best.is_none_or(|(_, b)| f.q[i] > b) {
                    best = Some((c, f.q[i]));
                }
            }
            match best {
                Some((c, q)) if q >= accept_thresh => c,
                _ => 0,
            }
        })
        .collect())
}

/// Paints every pixel with its superpixel's class.
pub fn rasterize(sp: &SuperpixelMap, classes: &[ClassId], table: &ClassTable) -> Result<LabelMap> {
    if classes.len() != sp.n() {
        return Err(Error::LengthMismatch {
            expected: sp.n(),
            found: classes.len(),
        });
    }
    let data = sp.assignment().iter().map(|&id| classes[id as usize]).collect();
    LabelMap::new(sp.width(), sp.height(), data, table.clone())
}
