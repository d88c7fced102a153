use std::path::PathBuf;

use crate::diffusion::DiffusionField;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("png error on {path}: {message}")]
    Png { path: PathBuf, message: String },

    // raster / file formats
    #[error("bad magic or version byte in FMAP file")]
    BadMagic,
    #[error("invalid dimensions {width}x{height}")]
    DimensionOverflow { width: u64, height: u64 },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{extra} unexpected trailing bytes after FMAP payload")]
    TrailingData { extra: usize },
    #[error("value {value} at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("image is not an indexed (paletted) PNG")]
    NonIndexedImage,
    #[error("unsupported image: {0}")]
    UnsupportedImage(String),
    #[error("class index {index} not present in class table of {len} entries")]
    IndexOutOfTable { index: u8, len: usize },
    #[error("invalid class table: {0}")]
    ClassTable(String),
    #[error("Lab image is already normalized")]
    DoubleNormalize,
    #[error("Lab image must be normalized")]
    NotNormalized,
    #[error("dimension mismatch: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("data length {found} does not match {width}x{height}x{channels}")]
    DataLength {
        width: usize,
        height: usize,
        channels: usize,
        found: usize,
    },

    // superpixels
    #[error("requested {k} superpixels for an image of {pixels} pixels")]
    KTooLarge { k: usize, pixels: usize },
    #[error("invalid superpixel parameters: {0}")]
    SuperpixelParams(String),

    // diffusion
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("diffusion requires at least one positive seed")]
    NoPositiveSeeds,
    #[error("seed sets overlap at node {0}")]
    OverlappingSeeds(usize),
    #[error("seed node {node} out of range for graph with {n} nodes")]
    SeedOutOfRange { node: usize, n: usize },
    #[error("solver did not converge: residual {residual:e} > tol {tol:e} after {iterations} iterations")]
    NonConvergence {
        residual: f64,
        tol: f64,
        iterations: usize,
        field: Box<DiffusionField>,
    },
    #[error("dense oracle limited to {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },

    // labeling
    #[error("class {0} produced no seed superpixels")]
    NoSeedsForClass(u8),
    #[error("invalid activation set: {0}")]
    InvalidActivations(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("threshold {name} = {value} outside its valid range")]
    InvalidThreshold { name: &'static str, value: f64 },

    // eval
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: u8, k: usize },
    #[error("no class is present in ground truth or prediction")]
    NoPresentClasses,

    // config
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
