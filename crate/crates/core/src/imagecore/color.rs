//! sRGB (D65) to CIELAB conversion and the normalization used for superpixel features.

use super::{LabImage, RawImage};
use crate::error::{Error, Result};

// sRGB primaries to XYZ, D65 reference white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];
const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

const EPSILON: f64 = 216.0 / 24389.0; // (6/29)^3
const KAPPA: f64 = 24389.0 / 27.0;

/// Affine map taking raw Lab to the unit cube: `L / l_scale` and
/// `(a + ab_offset) / ab_scale` (same for b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabNormalization {
    pub l_scale: f64,
    pub ab_offset: f64,
    pub ab_scale: f64,
}

/// The normalization applied by [`normalize_lab`]: `(L/100, (a+128)/255, (b+128)/255)`.
pub const LAB_NORMALIZATION: LabNormalization = LabNormalization {
    l_scale: 100.0,
    ab_offset: 128.0,
    ab_scale: 255.0,
};

impl LabNormalization {
    pub fn apply(&self, [l, a, b]: [f64; 3]) -> [f64; 3] {
        [
            (l / self.l_scale).clamp(0.0, 1.0),
            ((a + self.ab_offset) / self.ab_scale).clamp(0.0, 1.0),
            ((b + self.ab_offset) / self.ab_scale).clamp(0.0, 1.0),
        ]
    }
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    let v = if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    v * 255.0
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Converts one sRGB pixel to (L, a, b).
pub fn pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let xyz = mul(&RGB_TO_XYZ, lin);
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Inverse of [`pixel_to_lab`], returning unrounded sRGB channel values in [0, 255].
pub fn lab_to_rgb([l, a, b]: [f64; 3]) -> [f64; 3] {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE_D65[0],
        lab_f_inv(fy) * WHITE_D65[1],
        lab_f_inv(fz) * WHITE_D65[2],
    ];
    mul(&XYZ_TO_RGB, xyz).map(linear_to_srgb)
}

pub fn rgb_to_lab(img: &RawImage) -> LabImage {
    let data = img.pixels().map(pixel_to_lab).collect();
    LabImage {
        width: img.width(),
        height: img.height(),
        data,
        normalized: false,
    }
}

pub fn normalize_lab(img: &LabImage) -> Result<LabImage> {
    if img.normalized {
        return Err(Error::DoubleNormalize);
    }
    Ok(LabImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| LAB_NORMALIZATION.apply(p)).collect(),
        normalized: true,
    })
}
