//! Label propagation from class activation maps over a superpixel graph.
//!
//! The pipeline converts an image to normalized CIELAB, oversegments it with
//! SLIC, builds a Gaussian affinity graph over adjacent superpixels using
//! color and a class-agnostic segmentation map, picks seeds from per-class
//! activation maps, solves a clamped random-walk diffusion per class and
//! assigns each superpixel the class with the largest diffused value.

pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod imagecore;
pub mod labeling;
pub mod pipeline;
pub mod superpixel;
pub mod synth;

pub use error::{Error, Result};
