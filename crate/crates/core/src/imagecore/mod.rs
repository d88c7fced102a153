//! Raster types shared by the whole pipeline, plus color conversion and file I/O.

mod color;
mod io;

pub use color::{
    lab_to_rgb, normalize_lab, pixel_to_lab, rgb_to_lab, LabNormalization, LAB_NORMALIZATION,
};
pub use io::{
    load_class_table, load_fmap, load_label_png, load_label_png_with_void, load_rgb_png,
    parse_class_table, read_fmap, save_class_table, save_fmap, save_label_png, save_rgb_png, voc_palette,
    write_fmap, FMAP_MAGIC, FMAP_VERSION,
};

use crate::error::{Error, Result};

/// Class index in a label map. Index 0 is always background.
pub type ClassId = u8;

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionOverflow {
            width: width as u64,
            height: height as u64,
        });
    }
    Ok(())
}

fn check_len(width: usize, height: usize, channels: usize, found: usize) -> Result<()> {
    check_dims(width, height)?;
    if width.checked_mul(height).and_then(|p| p.checked_mul(channels)) != Some(found) {
        return Err(Error::DataLength {
            width,
            height,
            channels,
            found,
        });
    }
    Ok(())
}

/// An 8-bit sRGB raster, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, 3, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

/// CIELAB raster. Before normalization L is in [0, 100] and a, b roughly in
/// [-128, 127]; after normalization every channel lies in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
    normalized: bool,
}

impl LabImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>, normalized: bool) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        if normalized {
            for (i, px) in data.iter().enumerate() {
                if let Some(&v) = px.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::ValueOutOfRange { index: i, value: v });
                }
            }
        }
        Ok(Self {
            width,
            height,
            data,
            normalized,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Single-channel f32 raster with every value in [0, 1]. Holds both the
/// class-agnostic segmentation map and per-class activation maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FloatMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        for (i, &v) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange {
                    index: i,
                    value: v as f64,
                });
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        check_dims(width, height)?;
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// (min, max, mean) over all values; the mean is accumulated in f64.
    pub fn stats(&self) -> (f32, f32, f64) {
        let mut min = f32::INFINITY;
        let mut max = f32::NEG_INFINITY;
        let mut sum = 0.0f64;
        for &v in &self.data {
            min = min.min(v);
            max = max.max(v);
            sum += v as f64;
        }
        (min, max, sum / self.data.len() as f64)
    }
}

/// Ordered list of class names; position is the class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
}

impl ClassTable {
    /// Builds a table from names in index order. The first name must be `background`.
    pub fn new(names: Vec<String>) -> Result<Self> {
        match names.first() {
            None => return Err(Error::ClassTable("table is empty".into())),
            Some(n) if n != "background" => {
                return Err(Error::ClassTable(format!(
                    "index 0 must be `background`, found `{n}`"
                )))
            }
            _ => {}
        }
        if names.len() > 256 {
            return Err(Error::ClassTable(format!(
                "{} classes do not fit 8-bit indices",
                names.len()
            )));
        }
        if let Some(n) = names.iter().find(|n| n.is_empty() || n.contains(['\t', '\n'])) {
            return Err(Error::ClassTable(format!("invalid class name {n:?}")));
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        (id as usize) < self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (i as ClassId, n.as_str()))
    }
}

/// Per-pixel class indices. An optional void index (VOC uses 255) may appear
/// in ground-truth maps even though it lies outside the class table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    data: Vec<ClassId>,
    classes: ClassTable,
    void: Option<ClassId>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, data: Vec<ClassId>, classes: ClassTable) -> Result<Self> {
        Self::with_void(width, height, data, classes, None)
    }

    pub fn with_void(
        width: usize,
        height: usize,
        data: Vec<ClassId>,
        classes: ClassTable,
        void: Option<ClassId>,
    ) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        if let Some(&bad) = data
            .iter()
            .find(|&&c| !classes.contains(c) && Some(c) != void)
        {
            return Err(Error::IndexOutOfTable {
                index: bad,
                len: classes.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            classes,
            void,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[ClassId] {
        &self.data
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn void(&self) -> Option<ClassId> {
        self.void
    }

    pub fn get(&self, x: usize, y: usize) -> ClassId {
        self.data[y * self.width + x]
    }
}
