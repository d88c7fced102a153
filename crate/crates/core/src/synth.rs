//! Seeded synthetic fixtures with known ground truth: colored objects on a
//! background, a segmentation map equal to the object mask with flips near
//! object boundaries, and Gaussian activation bumps at object centers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imagecore::{
    save_class_table, save_fmap, save_label_png, save_rgb_png, ClassId, ClassTable, FloatMap, LabelMap, RawImage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthVariant {
    /// Two elliptical objects of different classes.
    TwoBlob,
    /// 3x3 board of squares alternating between two classes.
    Checker,
    /// One object of class 1 on a smooth color gradient.
    Gradient,
}

impl FromStr for SynthVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two-blob" => Ok(Self::TwoBlob),
            "checker" => Ok(Self::Checker),
            "gradient" => Ok(Self::Gradient),
            other => Err(format!("unknown variant `{other}` (two-blob, checker, gradient)")),
        }
    }
}

impl fmt::Display for SynthVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TwoBlob => "two-blob",
            Self::Checker => "checker",
            Self::Gradient => "gradient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub variant: SynthVariant,
    pub width: usize,
    pub height: usize,
    /// Probability of flipping the segmentation map within 2 px of an object boundary.
    pub boundary_noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            variant: SynthVariant::TwoBlob,
            width: 96,
            height: 96,
            boundary_noise: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub image: RawImage,
    pub mask: FloatMap,
    pub activations: Vec<(ClassId, FloatMap)>,
    pub ground_truth: LabelMap,
    pub classes: ClassTable,
}

/// File names written by [`Fixture::write`].
pub struct FixturePaths {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub activations: Vec<(ClassId, PathBuf)>,
    pub ground_truth: PathBuf,
    pub classes: PathBuf,
}

impl FixturePaths {
    pub fn in_dir(dir: &Path, classes: impl IntoIterator<Item = ClassId>) -> Self {
        Self {
            image: dir.join("image.png"),
            mask: dir.join("mask.fmap"),
            activations: classes
                .into_iter()
                .map(|c| (c, dir.join(format!("act_{c}.fmap"))))
                .collect(),
            ground_truth: dir.join("gt.png"),
            classes: dir.join("classes.txt"),
        }
    }
}

impl Fixture {
    pub fn write(&self, dir: &Path) -> Result<FixturePaths> {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        let paths = FixturePaths::in_dir(dir, self.activations.iter().map(|(c, _)| *c));
        save_rgb_png(&self.image, &paths.image)?;
        save_fmap(&self.mask, &paths.mask)?;
        for ((_, map), (_, path)) in self.activations.iter().zip(&paths.activations) {
            save_fmap(map, path)?;
        }
        save_label_png(&self.ground_truth, &paths.ground_truth)?;
        save_class_table(&self.classes, &paths.classes)?;
        Ok(paths)
    }
}

const PALETTE: [[f64; 3]; 5] = [
    [205.0, 45.0, 40.0],
    [40.0, 70.0, 200.0],
    [225.0, 200.0, 40.0],
    [40.0, 165.0, 70.0],
    [150.0, 55.0, 170.0],
];

/// Shape whose pixels belong to one class.
#[derive(Debug, Clone, Copy)]
enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
        }
    }

    fn center(&self) -> (f64, f64) {
        match *self {
            Shape::Ellipse { cx, cy, .. } => (cx, cy),
            Shape::Rect { x0, y0, x1, y1 } => ((x0 + x1) / 2.0, (y0 + y1) / 2.0),
        }
    }

    fn spread(&self) -> f64 {
        match *self {
            Shape::Ellipse { rx, ry, .. } => 0.5 * rx.min(ry),
            Shape::Rect { x0, y0, x1, y1 } => 0.25 * (x1 - x0).min(y1 - y0),
        }
    }
}

struct Object {
    class: ClassId,
    shape: Shape,
    color: [f64; 3],
}

fn pick_colors(rng: &mut ChaCha8Rng, count: usize) -> Vec<[f64; 3]> {
    let mut idx: Vec<usize> = (0..PALETTE.len()).collect();
    let mut out = Vec::new();
    for _ in 0..count {
        let k = rng.random_range(0..idx.len());
        let base = PALETTE[idx.remove(k)];
        out.push(base.map(|v| v + rng.random_range(-12.0..12.0)));
    }
    out
}

fn layout(rng: &mut ChaCha8Rng, opts: &SynthOptions) -> Vec<Object> {
    let (w, h) = (opts.width as f64, opts.height as f64);
    let m = w.min(h);
    match opts.variant {
        SynthVariant::TwoBlob => {
            let colors = pick_colors(rng, 2);
            (0..2)
                .map(|i| {
                    let rx = rng.random_range(0.13 * m..0.2 * m).min(0.22 * w);
                    let ry = rng.random_range(0.13 * m..0.2 * m);
                    let half = w / 2.0;
                    let lo = i as f64 * half + rx + 2.0;
                    let hi = (i as f64 + 1.0) * half - rx - 2.0;
                    let cx = if hi > lo { rng.random_range(lo..hi) } else { (lo + hi) / 2.0 };
                    let cy = rng.random_range(ry + 2.0..(h - ry - 2.0).max(ry + 2.5));
                    Object {
                        class: i as ClassId + 1,
                        shape: Shape::Ellipse { cx, cy, rx, ry },
                        color: colors[i],
                    }
                })
                .collect()
        }
        SynthVariant::Checker => {
            let colors = pick_colors(rng, 2);
            let (cw, ch) = (w / 3.0, h / 3.0);
            let gap = rng.random_range(0.15..0.25);
            let mut out = Vec::new();
            for j in 0..3 {
                for i in 0..3 {
                    let class = ((i + j) % 2) as usize;
                    out.push(Object {
                        class: class as ClassId + 1,
                        shape: Shape::Rect {
                            x0: (i as f64 + gap) * cw,
                            y0: (j as f64 + gap) * ch,
                            x1: (i as f64 + 1.0 - gap) * cw,
                            y1: (j as f64 + 1.0 - gap) * ch,
                        },
                        color: colors[class],
                    });
                }
            }
            out
        }
        SynthVariant::Gradient => {
            let color = [
                rng.random_range(200.0..230.0),
                rng.random_range(110.0..140.0),
                rng.random_range(20.0..50.0),
            ];
            let rx = rng.random_range(0.18 * m..0.25 * m);
            let ry = rng.random_range(0.18 * m..0.25 * m);
            let cx = rng.random_range(rx + 2.0..(w - rx - 2.0).max(rx + 2.5));
            let cy = rng.random_range(ry + 2.0..(h - ry - 2.0).max(ry + 2.5));
            vec![Object {
                class: 1,
                shape: Shape::Ellipse { cx, cy, rx, ry },
                color,
            }]
        }
    }
}

fn background(rng: &mut ChaCha8Rng, variant: SynthVariant) -> impl Fn(f64, f64) -> [f64; 3] {
    let gray = rng.random_range(110.0..140.0);
    let from = [rng.random_range(40.0..70.0), rng.random_range(90.0..120.0), rng.random_range(150.0..180.0)];
    let to = [rng.random_range(60.0..90.0), rng.random_range(160.0..190.0), rng.random_range(170.0..200.0)];
    move |u: f64, _v: f64| match variant {
        SynthVariant::Gradient => [0, 1, 2].map(|c| from[c] + (to[c] - from[c]) * u),
        _ => [gray; 3],
    }
}

/// Generates a fixture; identical options give identical fixtures.
pub fn generate(opts: &SynthOptions) -> Result<Fixture> {
    let (w, h) = (opts.width, opts.height);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let objects = layout(&mut rng, opts);
    let bg = background(&mut rng, opts.variant);
    let pixel_noise = match opts.variant {
        SynthVariant::Gradient => 3.0,
        _ => 6.0,
    };

    let mut gt = vec![0 as ClassId; w * h];
    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let hit = objects.iter().find(|o| o.shape.contains(fx, fy));
            let base = match hit {
                Some(o) => {
                    gt[y * w + x] = o.class;
                    o.color
                }
                None => bg(fx / (w.max(2) - 1) as f64, fy / (h.max(2) - 1) as f64),
            };
            for c in base {
                let v = c + rng.random_range(-pixel_noise..=pixel_noise);
                rgb.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }

    // segmentation map: object indicator, flipped near boundaries
    let mut mask: Vec<f32> = gt.iter().map(|&c| if c > 0 { 1.0 } else { 0.0 }).collect();
    if opts.boundary_noise > 0.0 {
        for y in 0..h {
            for x in 0..w {
                let here = gt[y * w + x] > 0;
                let near_edge = (y.saturating_sub(2)..(y + 3).min(h))
                    .any(|yy| (x.saturating_sub(2)..(x + 3).min(w)).any(|xx| (gt[yy * w + xx] > 0) != here));
                if near_edge && rng.random_bool(opts.boundary_noise.min(1.0)) {
                    mask[y * w + x] = 1.0 - mask[y * w + x];
                }
            }
        }
    }

    let mut classes: Vec<ClassId> = objects.iter().map(|o| o.class).collect();
    classes.sort_unstable();
    classes.dedup();
    let activations = classes
        .iter()
        .map(|&c| {
            let bumps: Vec<((f64, f64), f64)> = objects
                .iter()
                .filter(|o| o.class == c)
                .map(|o| (o.shape.center(), o.shape.spread()))
                .collect();
            let data = (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    bumps
                        .iter()
                        .map(|&((cx, cy), s)| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                        .fold(0.0, f64::max) as f32
                })
                .collect();
            FloatMap::new(w, h, data).map(|m| (c, m))
        })
        .collect::<Result<Vec<_>>>()?;

    let table = ClassTable::new(vec!["background".into(), "class_a".into(), "class_b".into()])?;
    Ok(Fixture {
        image: RawImage::new(w, h, rgb)?,
        mask: FloatMap::new(w, h, mask)?,
        activations,
        ground_truth: LabelMap::new(w, h, gt, table.clone())?,
        classes: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_fixture() {
        let opts = SynthOptions { seed: 42, ..Default::default() };
        let a = generate(&opts).unwrap();
        let b = generate(&opts).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.activations, b.activations);
        let c = generate(&SynthOptions { seed: 43, ..opts }).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn two_blob_has_three_classes() {
        for seed in 0..10 {
            let f = generate(&SynthOptions { seed, ..Default::default() }).unwrap();
            let mut seen = [false; 3];
            for &c in f.ground_truth.data() {
                seen[c as usize] = true;
            }
            assert_eq!(seen, [true; 3], "seed {seed}");
            assert_eq!(f.activations.len(), 2);
        }
    }

    #[test]
    fn variants_produce_expected_classes() {
        let checker = generate(&SynthOptions { variant: SynthVariant::Checker, ..Default::default() }).unwrap();
        assert_eq!(checker.activations.len(), 2);
        let grad = generate(&SynthOptions {
            variant: SynthVariant::Gradient,
            boundary_noise: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(grad.activations.len(), 1);
        // without noise the segmentation map is exactly the object mask
        for (&m, &g) in grad.mask.data().iter().zip(grad.ground_truth.data()) {
            assert_eq!(m == 1.0, g == 1);
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [SynthVariant::TwoBlob, SynthVariant::Checker, SynthVariant::Gradient] {
            assert_eq!(v.to_string().parse::<SynthVariant>().unwrap(), v);
        }
        assert!("blob".parse::<SynthVariant>().is_err());
    }
}
