//! End-to-end label generation: image + segmentation map + activation maps
//! to a per-pixel label map.

use std::collections::BTreeMap;

use crate::config::{DiffusionMode, PipelineConfig};
use crate::diffusion::{build_affinity, diffuse_all_classes_with, AffinityGraph, DiffusionField, DiffusionMethod};
use crate::error::{Error, Result};
use crate::imagecore::{normalize_lab, rgb_to_lab, ClassId, ClassTable, FloatMap, LabelMap, RawImage};
use crate::labeling::{extract_seeds, fuse_labels, rasterize, ActivationSet, SeedReport};
use crate::superpixel::{build_adjacency, compute_features, slic_segment, SlicParams, SuperpixelMap};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub labels: LabelMap,
    pub superpixels: SuperpixelMap,
    pub graph: AffinityGraph,
    pub seeds: SeedReport,
    pub fields: BTreeMap<ClassId, DiffusionField>,
    /// Per-superpixel class before rasterization.
    pub superpixel_classes: Vec<ClassId>,
}

impl PipelineOutput {
    /// Classes whose solve stopped at the iteration limit.
    pub fn nonconverged(&self) -> Vec<ClassId> {
        self.fields
            .iter()
            .filter(|(_, f)| !f.converged)
            .map(|(&c, _)| c)
            .collect()
    }
}

/// Runs Lab conversion, SLIC, features, affinity, seeding, per-class
/// diffusion, fusion and rasterization. The SLIC superpixel count is capped
/// at the pixel count so small images still segment.
pub fn run_pipeline(
    image: &RawImage,
    mask: &FloatMap,
    acts: &ActivationSet,
    classes: &ClassTable,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let dims = (image.width(), image.height());
    for found in [mask.dims(), acts.dims()] {
        if found != dims {
            return Err(Error::DimensionMismatch { expected: dims, found });
        }
    }
    if let Some(c) = acts.classes().find(|&c| !classes.contains(c)) {
        return Err(Error::IndexOutOfTable {
            index: c,
            len: classes.len(),
        });
    }

    let lab = normalize_lab(&rgb_to_lab(image))?;
    let params = SlicParams {
        k: cfg.slic_k.min(dims.0 * dims.1),
        compactness: cfg.slic_compactness,
        iters: cfg.slic_iters,
    };
    let superpixels = slic_segment(&lab, &params)?;
    let features = compute_features(&superpixels, &lab, mask)?;
    let graph = build_affinity(&build_adjacency(&superpixels), &features, cfg.sigma, cfg.affinity_norm)?;

    let seeds = extract_seeds(&superpixels, acts, mask, cfg.seed_frac, cfg.bg_thresh)?;
    let method = match cfg.diffusion_mode {
        DiffusionMode::Clamped => DiffusionMethod::Clamped {
            tol: cfg.solver_tol,
            max_iters: cfg.solver_max_iters_for(superpixels.n()),
        },
        DiffusionMode::Jacobi => DiffusionMethod::Jacobi {
            iters: cfg.jacobi_iters,
        },
    };
    let fields = diffuse_all_classes_with(&graph, &seeds.per_class, method)?;
    let superpixel_classes = fuse_labels(&fields, &seeds, cfg.accept_thresh)?;
    let labels = rasterize(&superpixels, &superpixel_classes, classes)?;

    Ok(PipelineOutput {
        labels,
        superpixels,
        graph,
        seeds,
        fields,
        superpixel_classes,
    })
}
