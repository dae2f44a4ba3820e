//! Pixel-level data model shared by every stage.

mod io;
mod preprocess;
mod raster;
mod roi;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use io::{read_gray, read_mask, read_probability_map, write_gray, write_mask};
pub use preprocess::{normalize_minmax, normalize_with_range, resize, resize_mask, PreprocessConfig};
pub use raster::{binarize, rasterize_polygon};
pub use roi::{crop_mask, crop_roi, merge_roi};

/// Positive (foreign-object) mask value.
pub const MASK_ON: u8 = 255;
/// Negative mask value.
pub const MASK_OFF: u8 = 0;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("box {bbox:?} exceeds image extent {width}x{height}")]
    OutOfBounds { bbox: BoundingBox, width: usize, height: usize },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),
    #[error("polygon repeats vertex {0} consecutively")]
    RepeatedVertex(usize),
    #[error("value out of range: {0}")]
    ValueOutOfRange(String),
    #[error("invalid dimensions {0}x{1}")]
    InvalidDimensions(usize, usize),
    #[error("data length {actual} does not match {width}x{height}")]
    DataLength { width: usize, height: usize, actual: usize },
    #[error("mask value {0} is neither 0 nor 255")]
    NotBinary(u8),
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),
    #[error("failed to decode {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, ImagingError>;

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions(width, height));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(ImagingError::DataLength { width, height, actual: len });
    }
    Ok(())
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
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

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn min_max(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn full_box(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width, self.height)
    }
}

/// Row-major mask whose values are exactly 0 or 255.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, {} on)", self.width, self.height, self.count_on())
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if let Some(&bad) = data.iter().find(|&&v| v != MASK_ON && v != MASK_OFF) {
            return Err(ImagingError::NotBinary(bad));
        }
        Ok(Self { width, height, data })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![MASK_OFF; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(if f(x, y) { MASK_ON } else { MASK_OFF });
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

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn is_on(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == MASK_ON
    }

    #[inline]
    pub fn is_on_idx(&self, idx: usize) -> bool {
        self.data[idx] == MASK_ON
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = if on { MASK_ON } else { MASK_OFF };
    }

    pub fn count_on(&self) -> usize {
        self.data.iter().filter(|&&v| v == MASK_ON).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == MASK_OFF)
    }

    /// Tight box around the positive pixels, `None` when the mask is empty.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_on(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != usize::MAX).then(|| BoundingBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    /// Morphological dilation with a square structuring element of the given radius.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = self.dims();
        let mut out = vec![MASK_OFF; w * h];
        for y in 0..h {
            for x in 0..w {
                if !self.is_on(x, y) {
                    continue;
                }
                for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                    for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                        out[yy * w + xx] = MASK_ON;
                    }
                }
            }
        }
        BinaryMask { width: w, height: h, data: out }
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        if self.dims() != other.dims() {
            return Err(ImagingError::DimensionMismatch { expected: self.dims(), actual: other.dims() });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a.max(b)).collect();
        Ok(BinaryMask { width: self.width, height: self.height, data })
    }

    /// Places `self` into a `width`x`height` canvas at (x, y); pixels falling outside are dropped.
    pub fn placed(&self, width: usize, height: usize, x: usize, y: usize) -> Result<BinaryMask> {
        let mut out = BinaryMask::empty(width, height)?;
        for my in 0..self.height {
            for mx in 0..self.width {
                let (cx, cy) = (x + mx, y + my);
                if cx < width && cy < height && self.is_on(mx, my) {
                    out.set(cx, cy, true);
                }
            }
        }
        Ok(out)
    }
}

/// Axis-aligned pixel rectangle: top-left column/row plus extent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> usize {
        let w = self.right().min(other.right()).saturating_sub(self.x.max(other.x));
        let h = self.bottom().min(other.bottom()).saturating_sub(self.y.max(other.y));
        w * h
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Grows the box by `margin` on every side, clamped to the image extent.
    pub fn expanded(&self, margin: usize, width: usize, height: usize) -> BoundingBox {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.right() + margin).min(width);
        let y1 = (self.bottom() + margin).min(height);
        BoundingBox::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }

    /// Clips a possibly out-of-frame rectangle given in signed coordinates.
    pub fn clipped(x: i64, y: i64, w: i64, h: i64, width: usize, height: usize) -> Option<BoundingBox> {
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = (x + w).min(width as i64);
        let y1 = (y + h).min(height as i64);
        (x1 > x0 && y1 > y0).then(|| BoundingBox::new(x0 as usize, y0 as usize, (x1 - x0) as usize, (y1 - y0) as usize))
    }
}

/// Closed polygon with sub-pixel vertices `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(ImagingError::DegeneratePolygon(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(ImagingError::RepeatedVertex(i));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    /// Area centroid; falls back to the vertex mean for zero-area polygons.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.vertices.len();
        let a = self.signed_area();
        if a.abs() < 1e-12 {
            let (sx, sy) = self.vertices.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
            return (sx / n as f64, sy / n as f64);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (x0, y0) = self.vertices[i];
            let (x1, y1) = self.vertices[(i + 1) % n];
            let cross = x0 * y1 - x1 * y0;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }
}

/// Row-major per-pixel foreground probabilities in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap<F: Scalar> {
    width: usize,
    height: usize,
    data: Vec<F>,
}

impl<F: Scalar> ProbabilityMap<F> {
    pub fn new(width: usize, height: usize, data: Vec<F>) -> Result<Self> {
        check_len(width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !(**v >= F::zero() && **v <= F::one())) {
            return Err(ImagingError::ValueOutOfRange(format!("probability {v} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
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

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> F {
        self.data[y * self.width + x]
    }
}
