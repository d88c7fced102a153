//! Pipeline configuration and its `key = value` text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! sigma = 0.1
//! slic_k = 600
//! solver_max_iters = auto
//! ```
//!
//! Unknown keys, repeated keys and out-of-range values are errors. Keys not
//! given keep their defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::diffusion::AffinityNorm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusionMode {
    /// Exact clamped minimizer.
    #[default]
    Clamped,
    /// Fixed-budget Jacobi sweeps (`jacobi_iters`).
    Jacobi,
}

impl FromStr for DiffusionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "clamped" => Ok(Self::Clamped),
            "jacobi" => Ok(Self::Jacobi),
            other => Err(format!("expected `clamped` or `jacobi`, got `{other}`")),
        }
    }
}

impl fmt::Display for DiffusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Clamped => "clamped",
            Self::Jacobi => "jacobi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Affinity bandwidth on the normalized feature scale.
    pub sigma: f64,
    pub seed_frac: f64,
    pub bg_thresh: f64,
    pub accept_thresh: f64,
    pub slic_k: usize,
    pub slic_compactness: f64,
    pub slic_iters: usize,
    pub solver_tol: f64,
    /// `None` means 10 x the number of superpixels.
    pub solver_max_iters: Option<usize>,
    pub affinity_norm: AffinityNorm,
    pub diffusion_mode: DiffusionMode,
    pub jacobi_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            seed_frac: 0.7,
            bg_thresh: 0.05,
            accept_thresh: 0.5,
            slic_k: 600,
            slic_compactness: 10.0,
            slic_iters: 10,
            solver_tol: 1e-8,
            solver_max_iters: None,
            affinity_norm: AffinityNorm::Linear,
            diffusion_mode: DiffusionMode::Clamped,
            jacobi_iters: 100,
        }
    }
}

const KEYS: [&str; 12] = [
    "sigma",
    "seed_frac",
    "bg_thresh",
    "accept_thresh",
    "slic_k",
    "slic_compactness",
    "slic_iters",
    "solver_tol",
    "solver_max_iters",
    "affinity_norm",
    "diffusion_mode",
    "jacobi_iters",
];

fn parse_num<T: FromStr>(value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse `{value}`"),
    })
}

impl PipelineConfig {
    pub fn solver_max_iters_for(&self, n: usize) -> usize {
        self.solver_max_iters.unwrap_or(10 * n.max(1))
    }

    /// Checks every field against its documented range.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::Config { line: 0, message });
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.seed_frac > 0.0 && self.seed_frac <= 1.0) {
            return bad(format!("seed_frac must be in (0, 1], got {}", self.seed_frac));
        }
        if !(0.0..1.0).contains(&self.bg_thresh) {
            return bad(format!("bg_thresh must be in [0, 1), got {}", self.bg_thresh));
        }
        if !(0.0..1.0).contains(&self.accept_thresh) {
            return bad(format!("accept_thresh must be in [0, 1), got {}", self.accept_thresh));
        }
        if self.slic_k == 0 {
            return bad("slic_k must be at least 1".into());
        }
        if !(self.slic_compactness >= 0.0 && self.slic_compactness.is_finite()) {
            return bad(format!("slic_compactness must be non-negative, got {}", self.slic_compactness));
        }
        if self.slic_iters == 0 {
            return bad("slic_iters must be at least 1".into());
        }
        if !(self.solver_tol > 0.0 && self.solver_tol.is_finite()) {
            return bad(format!("solver_tol must be positive, got {}", self.solver_tol));
        }
        if self.solver_max_iters == Some(0) {
            return bad("solver_max_iters must be at least 1 or `auto`".into());
        }
        if self.jacobi_iters == 0 {
            return bad("jacobi_iters must be at least 1".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = [false; KEYS.len()];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let slot = KEYS.iter().position(|k| *k == key).ok_or_else(|| Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            })?;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::Config {
                    line,
                    message: format!("key `{key}` given twice"),
                });
            }
            let enum_err = |message: String| Error::Config { line, message };
            match key {
                "sigma" => cfg.sigma = parse_num(value, line)?,
                "seed_frac" => cfg.seed_frac = parse_num(value, line)?,
                "bg_thresh" => cfg.bg_thresh = parse_num(value, line)?,
                "accept_thresh" => cfg.accept_thresh = parse_num(value, line)?,
                "slic_k" => cfg.slic_k = parse_num(value, line)?,
                "slic_compactness" => cfg.slic_compactness = parse_num(value, line)?,
                "slic_iters" => cfg.slic_iters = parse_num(value, line)?,
                "solver_tol" => cfg.solver_tol = parse_num(value, line)?,
                "solver_max_iters" => {
                    cfg.solver_max_iters = match value {
                        "auto" => None,
                        v => Some(parse_num(v, line)?),
                    }
                }
                "affinity_norm" => cfg.affinity_norm = value.parse().map_err(enum_err)?,
                "diffusion_mode" => cfg.diffusion_mode = value.parse().map_err(enum_err)?,
                "jacobi_iters" => cfg.jacobi_iters = parse_num(value, line)?,
                _ => unreachable!(),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Writes every key, so the output re-parses to an equal config.
impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sigma = {}", self.sigma)?;
        writeln!(f, "seed_frac = {}", self.seed_frac)?;
        writeln!(f, "bg_thresh = {}", self.bg_thresh)?;
        writeln!(f, "accept_thresh = {}", self.accept_thresh)?;
        writeln!(f, "slic_k = {}", self.slic_k)?;
        writeln!(f, "slic_compactness = {}", self.slic_compactness)?;
        writeln!(f, "slic_iters = {}", self.slic_iters)?;
        writeln!(f, "solver_tol = {:e}", self.solver_tol)?;
        match self.solver_max_iters {
            Some(n) => writeln!(f, "solver_max_iters = {n}")?,
            None => writeln!(f, "solver_max_iters = auto")?,
        }
        writeln!(f, "affinity_norm = {}", self.affinity_norm)?;
        writeln!(f, "diffusion_mode = {}", self.diffusion_mode)?;
        writeln!(f, "jacobi_iters = {}", self.jacobi_iters)
    }
}
