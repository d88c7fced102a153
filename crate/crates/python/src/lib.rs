//! Python bindings for the `labelprop` crate.
//!
//! Arrays cross the boundary as flat row-major Python lists so the module
//! has no numpy dependency; `numpy.asarray(m.data).reshape(m.height, m.width)`
//! recovers a 2-D view.

use std::collections::BTreeMap;

use labelprop::config::PipelineConfig as CoreConfig;
use labelprop::diffusion::{self as diff, AffinityNorm, SeedAssignment};
use labelprop::eval::{ConfusionMatrix as CoreConfusion, DEFAULT_IGNORE_INDEX};
use labelprop::imagecore::{self as ic, ClassId};
use labelprop::labeling::ActivationSet;
use labelprop::superpixel::{self as sp, SlicParams};
use labelprop::synth::{self, SynthOptions};
use labelprop::Error;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NonConvergence { .. } | Error::NoSeedsForClass(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for labelprop::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// 8-bit sRGB image.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct RgbImage(ic::RawImage);

#[pymethods]
impl RgbImage {
    /// `data` holds `width * height * 3` bytes, RGB interleaved.
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        ic::RawImage::new(width, height, data).py().map(Self)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        ic::load_rgb_png(path).py().map(Self)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ic::save_rgb_png(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn data(&self) -> Vec<u8> {
        self.0.data().to_vec()
    }

    /// Per-pixel CIELAB triples; normalized to `[0, 1]` when `normalized`.
    #[pyo3(signature = (normalized = false))]
    fn to_lab(&self, normalized: bool) -> PyResult<Vec<(f64, f64, f64)>> {
        let lab = ic::rgb_to_lab(&self.0);
        let lab = if normalized { ic::normalize_lab(&lab).py()? } else { lab };
        Ok(lab.data().iter().map(|p| (p[0], p[1], p[2])).collect())
    }
}

/// Single-channel float map with values in `[0, 1]`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct FloatMap(ic::FloatMap);

#[pymethods]
impl FloatMap {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        ic::FloatMap::new(width, height, data).py().map(Self)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        ic::load_fmap(path).py().map(Self)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ic::save_fmap(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn data(&self) -> Vec<f32> {
        self.0.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f32> {
        check_xy(x, y, self.0.dims())?;
        Ok(self.0.get(x, y))
    }

    /// `(min, max, mean)`.
    fn stats(&self) -> (f32, f32, f64) {
        self.0.stats()
    }

    fn __repr__(&self) -> String {
        format!("FloatMap({}x{})", self.0.width(), self.0.height())
    }
}

fn check_xy(x: usize, y: usize, (w, h): (usize, usize)) -> PyResult<()> {
    if x >= w || y >= h {
        return Err(PyValueError::new_err(format!("({x}, {y}) outside {w}x{h}")));
    }
    Ok(())
}

/// Class names indexed by id; entry 0 is `background`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct ClassTable(ic::ClassTable);

#[pymethods]
impl ClassTable {
    #[new]
    fn new(names: Vec<String>) -> PyResult<Self> {
        ic::ClassTable::new(names).py().map(Self)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        ic::load_class_table(path).py().map(Self)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ic::save_class_table(&self.0, path).py()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Per-pixel class ids.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct LabelMap(ic::LabelMap);

#[pymethods]
impl LabelMap {
    #[new]
    #[pyo3(signature = (width, height, data, classes, void = None))]
    fn new(width: usize, height: usize, data: Vec<ClassId>, classes: &ClassTable, void: Option<ClassId>) -> PyResult<Self> {
        ic::LabelMap::with_void(width, height, data, classes.0.clone(), void).py().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (path, classes, void = None))]
    fn load(path: &str, classes: &ClassTable, void: Option<ClassId>) -> PyResult<Self> {
        ic::load_label_png_with_void(path, &classes.0, void).py().map(Self)
    }

    /// Writes an 8-bit indexed PNG with the VOC palette.
    fn save(&self, path: &str) -> PyResult<()> {
        ic::save_label_png(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn data(&self) -> Vec<ClassId> {
        self.0.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<ClassId> {
        check_xy(x, y, self.0.dims())?;
        Ok(self.0.get(x, y))
    }
}

/// Superpixel ids per pixel, from SLIC.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Superpixels(sp::SuperpixelMap);

#[pymethods]
impl Superpixels {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn assignment(&self) -> Vec<u32> {
        self.0.assignment().to_vec()
    }

    fn sizes(&self) -> Vec<usize> {
        self.0.sizes()
    }

    /// Undirected region-adjacency edges `(i, j)` with `i < j`.
    fn adjacency(&self) -> Vec<(u32, u32)> {
        sp::build_adjacency(&self.0).edges().to_vec()
    }

    /// Mean normalized Lab plus mean mask value per superpixel.
    fn features(&self, image: &RgbImage, mask: &FloatMap) -> PyResult<Vec<[f64; 4]>> {
        let lab = ic::normalize_lab(&ic::rgb_to_lab(&image.0)).py()?;
        Ok(sp::compute_features(&self.0, &lab, &mask.0).py()?.features().to_vec())
    }

    /// Gaussian affinity graph over adjacent superpixels.
    #[pyo3(signature = (image, mask, sigma, norm = "linear"))]
    fn affinity(&self, image: &RgbImage, mask: &FloatMap, sigma: f64, norm: &str) -> PyResult<AffinityGraph> {
        let norm: AffinityNorm = norm.parse().map_err(PyValueError::new_err)?;
        let lab = ic::normalize_lab(&ic::rgb_to_lab(&image.0)).py()?;
        let feats = sp::compute_features(&self.0, &lab, &mask.0).py()?;
        diff::build_affinity(&sp::build_adjacency(&self.0), &feats, sigma, norm).py().map(AffinityGraph)
    }
}

#[pyfunction]
#[pyo3(signature = (image, k = 600, compactness = 10.0, iters = 10))]
fn slic_segment(image: &RgbImage, k: usize, compactness: f64, iters: usize) -> PyResult<Superpixels> {
    let lab = ic::normalize_lab(&ic::rgb_to_lab(&image.0)).py()?;
    sp::slic_segment(&lab, &SlicParams { k, compactness, iters }).py().map(Superpixels)
}

/// Unnormalized CIELAB of one sRGB pixel.
#[pyfunction]
fn pixel_to_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let [l, a, bb] = ic::pixel_to_lab([r, g, b]);
    (l, a, bb)
}

/// Weighted undirected graph with affinities in `(0, 1]`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct AffinityGraph(diff::AffinityGraph);

#[pymethods]
impl AffinityGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        diff::AffinityGraph::from_edges(n, edges).py().map(Self)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.0.edges().to_vec()
    }

    fn energy(&self, q: Vec<f64>) -> PyResult<f64> {
        if q.len() != self.0.n() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.0.n(), q.len())));
        }
        Ok(diff::energy(&self.0, &q))
    }
}

#[pyclass(frozen, get_all)]
struct DiffusionField {
    q: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

impl From<diff::DiffusionField> for DiffusionField {
    fn from(f: diff::DiffusionField) -> Self {
        Self {
            q: f.q,
            residual: f.residual,
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

/// Clamped random-walk diffusion. Raises `RuntimeError` if the solver hits
/// `max_iters` (default `10 * n`) before reaching `tol`.
#[pyfunction]
#[pyo3(signature = (graph, ones, zeros = Vec::new(), tol = 1e-8, max_iters = None))]
fn solve_diffusion(
    graph: &AffinityGraph,
    ones: Vec<usize>,
    zeros: Vec<usize>,
    tol: f64,
    max_iters: Option<usize>,
) -> PyResult<DiffusionField> {
    let seeds = SeedAssignment::new(ones, zeros).py()?;
    let iters = max_iters.unwrap_or(10 * graph.0.n());
    diff::solve_diffusion(&graph.0, &seeds, tol, iters).py().map(Into::into)
}

/// Dense direct solve, for graphs of up to 200 nodes.
#[pyfunction]
#[pyo3(signature = (graph, ones, zeros = Vec::new()))]
fn solve_diffusion_oracle(graph: &AffinityGraph, ones: Vec<usize>, zeros: Vec<usize>) -> PyResult<DiffusionField> {
    let seeds = SeedAssignment::new(ones, zeros).py()?;
    diff::solve_diffusion_oracle(&graph.0, &seeds).py().map(Into::into)
}

/// Pipeline parameters; `PipelineConfig()` gives the defaults and
/// `PipelineConfig("sigma = 0.2\n")` parses the `key = value` format.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct PipelineConfig(CoreConfig);

#[pymethods]
impl PipelineConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        match text {
            Some(t) => CoreConfig::parse(t).py().map(Self),
            None => Ok(Self(CoreConfig::default())),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CoreConfig::load(path).py().map(Self)
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn seed_frac(&self) -> f64 {
        self.0.seed_frac
    }

    #[getter]
    fn bg_thresh(&self) -> f64 {
        self.0.bg_thresh
    }

    #[getter]
    fn accept_thresh(&self) -> f64 {
        self.0.accept_thresh
    }

    #[getter]
    fn slic_k(&self) -> usize {
        self.0.slic_k
    }

    #[getter]
    fn solver_tol(&self) -> f64 {
        self.0.solver_tol
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(frozen, get_all)]
struct PipelineResult {
    labels: LabelMap,
    superpixels: Superpixels,
    superpixel_classes: Vec<ClassId>,
    nonconverged: Vec<ClassId>,
}

/// Full label generation for one image. `activations` maps class id to its
/// activation map.
#[pyfunction]
#[pyo3(signature = (image, mask, activations, classes, config = None))]
fn run_pipeline(
    py: Python<'_>,
    image: &RgbImage,
    mask: &FloatMap,
    activations: BTreeMap<ClassId, FloatMap>,
    classes: &ClassTable,
    config: Option<&PipelineConfig>,
) -> PyResult<PipelineResult> {
    let acts = ActivationSet::new(activations.into_iter().map(|(c, m)| (c, m.0)).collect()).py()?;
    let cfg = config.map(|c| c.0.clone()).unwrap_or_default();
    let (image, mask, classes) = (&image.0, &mask.0, &classes.0);
    let out = py
        .detach(|| labelprop::pipeline::run_pipeline(image, mask, &acts, classes, &cfg))
        .py()?;
    Ok(PipelineResult {
        nonconverged: out.nonconverged(),
        labels: LabelMap(out.labels),
        superpixels: Superpixels(out.superpixels),
        superpixel_classes: out.superpixel_classes,
    })
}

/// Pixel confusion counts; rows are ground truth, columns prediction.
#[pyclass]
struct ConfusionMatrix(CoreConfusion);

#[pymethods]
impl ConfusionMatrix {
    #[new]
    fn new(k: usize) -> Self {
        Self(CoreConfusion::new(k))
    }

    #[pyo3(signature = (gt, pred, ignore = Some(DEFAULT_IGNORE_INDEX)))]
    fn accumulate(&mut self, gt: &LabelMap, pred: &LabelMap, ignore: Option<ClassId>) -> PyResult<()> {
        self.0.accumulate(&gt.0, &pred.0, ignore).py()
    }

    fn get(&self, gt: usize, pred: usize) -> PyResult<u64> {
        if gt >= self.0.k() || pred >= self.0.k() {
            return Err(PyValueError::new_err("class index out of range"));
        }
        Ok(self.0.get(gt, pred))
    }

    /// IoU per class, `None` for classes absent from both maps.
    fn iou_per_class(&self) -> Vec<Option<f64>> {
        self.0.iou_per_class()
    }

    fn mean_iou(&self) -> PyResult<f64> {
        self.0.mean_iou().py()
    }

    fn report(&self) -> PyResult<String> {
        self.0.report().py()
    }
}

#[pyclass(frozen, get_all)]
struct Fixture {
    image: RgbImage,
    mask: FloatMap,
    activations: BTreeMap<ClassId, FloatMap>,
    ground_truth: LabelMap,
    classes: ClassTable,
}

/// Deterministic synthetic fixture (`two-blob`, `checker` or `gradient`).
#[pyfunction]
#[pyo3(signature = (seed = 0, variant = "two-blob", width = 96, height = 96, noise = 0.3))]
fn synth_fixture(seed: u64, variant: &str, width: usize, height: usize, noise: f64) -> PyResult<Fixture> {
    let opts = SynthOptions {
        seed,
        variant: variant.parse().map_err(|e: String| PyValueError::new_err(e))?,
        width,
        height,
        boundary_noise: noise,
    };
    let fx = synth::generate(&opts).py()?;
    Ok(Fixture {
        image: RgbImage(fx.image),
        mask: FloatMap(fx.mask),
        activations: fx.activations.into_iter().map(|(c, m)| (c, FloatMap(m))).collect(),
        ground_truth: LabelMap(fx.ground_truth),
        classes: ClassTable(fx.classes),
    })
}

#[pymodule]
#[pyo3(name = "labelprop")]
fn labelprop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RgbImage>()?;
    m.add_class::<FloatMap>()?;
    m.add_class::<ClassTable>()?;
    m.add_class::<LabelMap>()?;
    m.add_class::<Superpixels>()?;
    m.add_class::<AffinityGraph>()?;
    m.add_class::<DiffusionField>()?;
    m.add_class::<PipelineConfig>()?;
    m.add_class::<PipelineResult>()?;
    m.add_class::<ConfusionMatrix>()?;
    m.add_class::<Fixture>()?;
    m.add_function(wrap_pyfunction!(pixel_to_lab, m)?)?;
    m.add_function(wrap_pyfunction!(slic_segment, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diffusion, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diffusion_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(synth_fixture, m)?)?;
    Ok(())
}
