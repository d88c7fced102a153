//! SLIC clustering over normalized Lab plus pixel position.
//!
//! Distance between a pixel and a cluster center:
//!
//! ```text
//! D^2 = (SLIC_COLOR_SCALE * d_lab)^2 + (compactness * d_xy / S)^2
//! ```
//!
//! where `S` is the grid step. Clusters are visited in id order and a pixel
//! only moves to a strictly closer center, so ties go to the lowest id.

use super::connectivity::repair;
use super::SuperpixelMap;
use crate::error::{Error, Result};
use crate::imagecore::LabImage;

/// Factor applied to normalized Lab distances so that `compactness` keeps the
/// range it has with raw Lab values (L spans 0..100).
pub const SLIC_COLOR_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    /// Requested number of superpixels.
    pub k: usize,
    pub compactness: f64,
    pub iters: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            k: 600,
            compactness: 10.0,
            iters: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

fn gradient(img: &LabImage, x: usize, y: usize) -> f64 {
    let (w, h) = img.dims();
    let d = |a: [f64; 3], b: [f64; 3]| -> f64 { a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum() };
    let gx = d(img.pixel((x + 1).min(w - 1), y), img.pixel(x.saturating_sub(1), y));
    let gy = d(img.pixel(x, (y + 1).min(h - 1)), img.pixel(x, y.saturating_sub(1)));
    gx + gy
}

/// Grid of initial centers with `nx * ny <= k`.
fn grid_dims(width: usize, height: usize, k: usize) -> (usize, usize) {
    let step = ((width * height) as f64 / k as f64).sqrt();
    let nx = ((width as f64 / step).round() as usize).clamp(1, width.min(k));
    let ny = ((height as f64 / step).round() as usize)
        .min(k / nx)
        .clamp(1, height);
    (nx, ny)
}

fn initial_centers(img: &LabImage, nx: usize, ny: usize) -> Vec<Center> {
    let (w, h) = img.dims();
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (i as f64 + 0.5) * w as f64 / nx as f64 - 0.5;
            let cy = (j as f64 + 0.5) * h as f64 / ny as f64 - 0.5;
            let (bx, by) = (
                (cx.round() as usize).min(w - 1),
                (cy.round() as usize).min(h - 1),
            );
            // move to the lowest-gradient pixel of the 3x3 neighbourhood
            let (mut best, mut best_g) = ((bx, by), gradient(img, bx, by));
            for yy in by.saturating_sub(1)..=(by + 1).min(h - 1) {
                for xx in bx.saturating_sub(1)..=(bx + 1).min(w - 1) {
                    let g = gradient(img, xx, yy);
                    if g < best_g {
                        best = (xx, yy);
                        best_g = g;
                    }
                }
            }
            centers.push(Center {
                lab: img.pixel(best.0, best.1),
                x: best.0 as f64,
                y: best.1 as f64,
            });
        }
    }
    centers
}

/// Runs SLIC and repairs connectivity. Fragments smaller than
/// `pixels / (4k)` are merged, and the result never has more than `2k`
/// superpixels.
pub fn slic_segment(img: &LabImage, params: &SlicParams) -> Result<SuperpixelMap> {
    if !img.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let (w, h) = img.dims();
    let pixels = w * h;
    let SlicParams { k, compactness, iters } = *params;
    if k == 0 {
        return Err(Error::SuperpixelParams("k must be at least 1".into()));
    }
    if k > pixels {
        return Err(Error::KTooLarge { k, pixels });
    }
    if iters == 0 {
        return Err(Error::SuperpixelParams("iters must be at least 1".into()));
    }
    if !(compactness.is_finite() && compactness >= 0.0) {
        return Err(Error::SuperpixelParams(format!(
            "compactness must be finite and non-negative, got {compactness}"
        )));
    }

    let (nx, ny) = grid_dims(w, h, k);
    let step = (w as f64 / nx as f64).max(h as f64 / ny as f64);
    let spatial = compactness / step;
    let mut centers = initial_centers(img, nx, ny);
    let lab = img.data();

    let mut labels = vec![0u32; pixels];
    let mut dist = vec![f64::INFINITY; pixels];
    for _ in 0..iters {
        dist.fill(f64::INFINITY);
        for (id, c) in centers.iter().enumerate() {
            let x0 = (c.x - step).ceil().max(0.0) as usize;
            let x1 = ((c.x + step).floor() as usize).min(w - 1);
            let y0 = (c.y - step).ceil().max(0.0) as usize;
            let y1 = ((c.y + step).floor() as usize).min(h - 1);
            for y in y0..=y1 {
                let dy = y as f64 - c.y;
                for x in x0..=x1 {
                    let i = y * w + x;
                    let p = lab[i];
                    let dc = (p[0] - c.lab[0]).powi(2)
                        + (p[1] - c.lab[1]).powi(2)
                        + (p[2] - c.lab[2]).powi(2);
                    let dx = x as f64 - c.x;
                    let d = SLIC_COLOR_SCALE * SLIC_COLOR_SCALE * dc
                        + spatial * spatial * (dx * dx + dy * dy);
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = id as u32;
                    }
                }
            }
        }

        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let s = &mut sums[l as usize];
            let p = lab[i];
            s[0] += p[0];
            s[1] += p[1];
            s[2] += p[2];
            s[3] += (i % w) as f64;
            s[4] += (i / w) as f64;
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                c.lab = [s[0] / s[5], s[1] / s[5], s[2] / s[5]];
                c.x = s[3] / s[5];
                c.y = s[4] / s[5];
            }
        }
    }

    let min_size = pixels.div_ceil(4 * k);
    Ok(repair(w, h, &labels, min_size, 2 * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(w: usize, h: usize, v: f64) -> LabImage {
        LabImage::new(w, h, vec![[v; 3]; w * h], true).unwrap()
    }

    #[test]
    fn grid_never_exceeds_k() {
        for (w, h) in [(1, 100), (100, 1), (10, 10), (7, 13), (96, 96), (3, 1)] {
            for k in 1..=(w * h).min(200) {
                let (nx, ny) = grid_dims(w, h, k);
                assert!(nx * ny <= k && nx >= 1 && ny >= 1, "{w}x{h} k={k}: {nx}x{ny}");
            }
        }
    }

    #[test]
    fn single_pixel() {
        let sp = slic_segment(&uniform(1, 1, 0.5), &SlicParams { k: 1, ..Default::default() }).unwrap();
        assert_eq!(sp.n(), 1);
        assert_eq!(sp.assignment(), &[0]);
    }

    #[test]
    fn parameter_errors() {
        let img = uniform(3, 3, 0.5);
        let p = |k, iters| SlicParams { k, compactness: 10.0, iters };
        assert!(matches!(slic_segment(&img, &p(10, 5)), Err(Error::KTooLarge { k: 10, pixels: 9 })));
        assert!(slic_segment(&img, &p(0, 5)).is_err());
        assert!(slic_segment(&img, &p(2, 0)).is_err());
        let raw = LabImage::new(1, 1, vec![[50.0, 0.0, 0.0]], false).unwrap();
        assert!(matches!(slic_segment(&raw, &p(1, 1)), Err(Error::NotNormalized)));
    }
}
