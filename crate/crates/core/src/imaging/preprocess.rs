use serde::{Deserialize, Serialize};

use super::{BinaryMask, GrayImage, ImagingError, Result};
use crate::quantize;

/// Target size of the pre-processed frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub target_width: usize,
    pub target_height: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { target_width: 512, target_height: 512 }
    }
}

impl PreprocessConfig {
    pub const MIN_SIDE: usize = 32;

    pub fn new(target_width: usize, target_height: usize) -> Result<Self> {
        let cfg = Self { target_width, target_height };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_width < Self::MIN_SIDE || self.target_height < Self::MIN_SIDE {
            return Err(ImagingError::InvalidDimensions(self.target_width, self.target_height));
        }
        Ok(())
    }
}

/// Stretches intensities affinely so the darkest pixel maps to 0 and the
/// brightest to 255. Constant images map to all-zero.
pub fn normalize_minmax(img: &GrayImage) -> GrayImage {
    let (lo, hi) = img.min_max();
    normalize_with_range(img, lo, hi)
}

/// Applies the min-max map defined by `lo`/`hi` (which need not come from `img`).
/// Values are clamped to `[lo, hi]` first; quantisation rounds half up.
pub fn normalize_with_range(img: &GrayImage, lo: u8, hi: u8) -> GrayImage {
    let data = if hi <= lo {
        vec![0; img.data().len()]
    } else {
        let den = u32::from(hi - lo);
        img.data()
            .iter()
            .map(|&v| {
                let num = u32::from(v.clamp(lo, hi) - lo) * 255;
                // floor(num/den + 1/2) in integers
                ((2 * num + den) / (2 * den)) as u8
            })
            .collect()
    };
    GrayImage { width: img.width, height: img.height, data }
}

#[inline]
fn source_coord(i: usize, src: usize, dst: usize) -> f64 {
    let s = (i as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
    s.clamp(0.0, (src - 1) as f64)
}

/// Bilinear resampling at output pixel centres.
pub fn resize(img: &GrayImage, cfg: &PreprocessConfig) -> GrayImage {
    resize_to(img, cfg.target_width, cfg.target_height)
}

pub(crate) fn resize_to(img: &GrayImage, dw: usize, dh: usize) -> GrayImage {
    let (sw, sh) = img.dims();
    if (sw, sh) == (dw, dh) {
        return img.clone();
    }
    let xs: Vec<(usize, usize, f64)> = (0..dw)
        .map(|i| {
            let s = source_coord(i, sw, dw);
            let x0 = s.floor() as usize;
            (x0, (x0 + 1).min(sw - 1), s - x0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(dw * dh);
    for j in 0..dh {
        let s = source_coord(j, sh, dh);
        let y0 = s.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = s - y0 as f64;
        for &(x0, x1, fx) in &xs {
            let top = f64::from(img.get(x0, y0)) * (1.0 - fx) + f64::from(img.get(x1, y0)) * fx;
            let bot = f64::from(img.get(x0, y1)) * (1.0 - fx) + f64::from(img.get(x1, y1)) * fx;
            data.push(quantize(top * (1.0 - fy) + bot * fy));
        }
    }
    GrayImage { width: dw, height: dh, data }
}

/// Nearest-neighbour resampling; keeps the {0, 255} value domain.
pub fn resize_mask(mask: &BinaryMask, cfg: &PreprocessConfig) -> BinaryMask {
    let (sw, sh) = mask.dims();
    let (dw, dh) = (cfg.target_width, cfg.target_height);
    let nearest = |i: usize, src: usize, dst: usize| (((2 * i + 1) * src) / (2 * dst)).min(src - 1);
    let mut data = Vec::with_capacity(dw * dh);
    for j in 0..dh {
        let sy = nearest(j, sh, dh);
        for i in 0..dw {
            data.push(mask.data()[sy * sw + nearest(i, sw, dw)]);
        }
    }
    BinaryMask { width: dw, height: dh, data }
}
