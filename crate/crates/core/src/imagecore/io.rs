//! File formats: FMAP float maps, indexed-PNG label maps, RGB PNG images and
//! class tables.
//!
//! FMAP layout (little-endian):
//!
//! ```text
//! "FMAP0001" | u32 width | u32 height | width*height f32, row-major | 0x01
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ClassId, ClassTable, FloatMap, LabelMap, RawImage};
use crate::error::{Error, Result};

pub const FMAP_MAGIC: &[u8; 8] = b"FMAP0001";
pub const FMAP_VERSION: u8 = 0x01;
const FMAP_HEADER: usize = 16;

/// Serializes a map to FMAP bytes.
pub fn write_fmap(map: &FloatMap, out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(FMAP_HEADER + map.data().len() * 4 + 1);
    buf.extend_from_slice(FMAP_MAGIC);
    buf.extend_from_slice(&(map.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for v in map.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(FMAP_VERSION);
    out.write_all(&buf)
}

/// Parses FMAP bytes.
pub fn read_fmap(bytes: &[u8]) -> Result<FloatMap> {
    if bytes.len() < 8 || &bytes[..8] != FMAP_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < FMAP_HEADER {
        return Err(Error::TruncatedPayload {
            expected: FMAP_HEADER,
            found: bytes.len(),
        });
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as u64;
    let payload = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .filter(|_| width > 0 && height > 0)
        .and_then(|n| usize::try_from(n).ok())
        .and_then(|n| n.checked_add(FMAP_HEADER + 1))
        .ok_or(Error::DimensionOverflow { width, height })?;
    let expected = payload;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingData {
            extra: bytes.len() - expected,
        });
    }
    if bytes[expected - 1] != FMAP_VERSION {
        return Err(Error::BadMagic);
    }
    let data: Vec<f32> = bytes[FMAP_HEADER..expected - 1]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FloatMap::new(width as usize, height as usize, data)
}

pub fn load_fmap(path: impl AsRef<Path>) -> Result<FloatMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_fmap(&bytes)
}

pub fn save_fmap(map: &FloatMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_fmap(map, &mut f)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

/// The PASCAL VOC color map: 256 RGB entries generated by bit interleaving.
pub fn voc_palette() -> Vec<u8> {
    let mut pal = Vec::with_capacity(256 * 3);
    for i in 0..256u32 {
        let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
        let mut c = i;
        for j in 0..8 {
            r |= ((c & 1) as u8) << (7 - j);
            g |= (((c >> 1) & 1) as u8) << (7 - j);
            b |= (((c >> 2) & 1) as u8) << (7 - j);
            c >>= 3;
        }
        pal.extend_from_slice(&[r, g, b]);
    }
    pal
}

fn png_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn open_png(path: &Path) -> Result<png::Reader<BufReader<File>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(f));
    dec.set_transformations(png::Transformations::IDENTITY);
    dec.read_info().map_err(|e| png_err(path, e))
}

/// Reads the raw palette indices of an indexed PNG.
fn read_indices(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut reader = open_png(path)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Indexed {
        return Err(Error::NonIndexedImage);
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let depth = info.bit_depth as usize;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| png_err(path, "image too large"))?];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    let stride = frame.line_size;
    let mut out = Vec::with_capacity(w * h);
    for row in buf.chunks(stride).take(h) {
        if depth == 8 {
            out.extend_from_slice(&row[..w]);
        } else {
            let per_byte = 8 / depth;
            let mask = (1u8 << depth) - 1;
            for x in 0..w {
                let byte = row[x / per_byte];
                let shift = 8 - depth * (x % per_byte + 1);
                out.push((byte >> shift) & mask);
            }
        }
    }
    Ok((w, h, out))
}

/// Loads an indexed PNG as a label map; every palette index must be in `classes`.
pub fn load_label_png(path: impl AsRef<Path>, classes: &ClassTable) -> Result<LabelMap> {
    load_label_png_with_void(path, classes, None)
}

/// Like [`load_label_png`] but tolerates a void index (e.g. 255 in VOC ground truth).
pub fn load_label_png_with_void(
    path: impl AsRef<Path>,
    classes: &ClassTable,
    void: Option<ClassId>,
) -> Result<LabelMap> {
    let (w, h, data) = read_indices(path.as_ref())?;
    LabelMap::with_void(w, h, data, classes.clone(), void)
}

/// Writes an 8-bit indexed PNG with the VOC palette; palette index == class index.
pub fn save_label_png(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(f), map.width() as u32, map.height() as u32);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_palette(voc_palette());
    let mut writer = enc.write_header().map_err(|e| png_err(path, e))?;
    writer
        .write_image_data(map.data())
        .map_err(|e| png_err(path, e))?;
    writer.finish().map_err(|e| png_err(path, e))
}

/// Loads an 8-bit PNG (gray, gray+alpha, RGB, RGBA or indexed) as sRGB; alpha is dropped.
pub fn load_rgb_png(path: impl AsRef<Path>) -> Result<RawImage> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(f));
    dec.set_transformations(png::Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(|e| png_err(path, e))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| png_err(path, "image too large"))?];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedImage(format!(
            "{:?}-bit samples",
            frame.bit_depth
        )));
    }
    let (w, h) = (frame.width as usize, frame.height as usize);
    let channels = frame.color_type.samples();
    let mut data = Vec::with_capacity(w * h * 3);
    for row in buf.chunks(frame.line_size).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            match channels {
                1 | 2 => data.extend_from_slice(&[px[0]; 3]),
                _ => data.extend_from_slice(&px[..3]),
            }
        }
    }
    RawImage::new(w, h, data)
}

pub fn save_rgb_png(img: &RawImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(f), img.width() as u32, img.height() as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| png_err(path, e))?;
    writer
        .write_image_data(img.data())
        .map_err(|e| png_err(path, e))?;
    writer.finish().map_err(|e| png_err(path, e))
}

/// Parses a class table: one `index<TAB>name` line per class, indices
/// contiguous from 0, index 0 named `background`. Blank lines and `#`
/// comments are skipped.
pub fn parse_class_table(text: &str) -> Result<ClassTable> {
    let mut names = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, name) = line.split_once('\t').ok_or_else(|| {
            Error::ClassTable(format!("line {}: expected `index<TAB>name`", lineno + 1))
        })?;
        let idx: usize = idx.trim().parse().map_err(|_| {
            Error::ClassTable(format!("line {}: bad index `{idx}`", lineno + 1))
        })?;
        if idx != names.len() {
            return Err(Error::ClassTable(format!(
                "line {}: expected index {}, found {idx}",
                lineno + 1,
                names.len()
            )));
        }
        names.push(name.trim().to_string());
    }
    ClassTable::new(names)
}

pub fn load_class_table(path: impl AsRef<Path>) -> Result<ClassTable> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_class_table(&text)
}

pub fn save_class_table(table: &ClassTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text: String = table.iter().map(|(i, n)| format!("{i}\t{n}\n")).collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
