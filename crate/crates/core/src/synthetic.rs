//! Synthetic radiograph stand-ins with known ground truth: smooth backgrounds
//! with bright discs pasted on top, plus random masks for property tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::imaging::{normalize_with_range, BinaryMask, BoundingBox, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub cx: usize,
    pub cy: usize,
    pub radius: usize,
    /// Intensity added on top of the background.
    pub contrast: u8,
}

impl Disc {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (dx, dy) = (x as i64 - self.cx as i64, y as i64 - self.cy as i64);
        dx * dx + dy * dy <= (self.radius * self.radius) as i64
    }

    pub fn mask(&self, width: usize, height: usize) -> BinaryMask {
        BinaryMask::from_fn(width, height, |x, y| self.contains(x, y)).expect("non-zero dims")
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::new(self.cx - self.radius, self.cy - self.radius, 2 * self.radius + 1, 2 * self.radius + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub width: usize,
    pub height: usize,
    pub max_discs: usize,
    pub radius: (usize, usize),
    pub contrast: (u8, u8),
    /// Minimum free space between disc rims, and between a rim and the border.
    pub gap: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { width: 512, height: 512, max_discs: 3, radius: (6, 12), contrast: (80, 110), gap: 24 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCase {
    pub image_id: String,
    /// Background only.
    pub clean: GrayImage,
    /// Background with the discs pasted in.
    pub dirty: GrayImage,
    pub discs: Vec<Disc>,
}

/// Low-frequency background in roughly [45, 145]: a tilted plane plus two
/// long-period ripples.
fn background<R: Rng>(rng: &mut R, width: usize, height: usize) -> Vec<f64> {
    let base = rng.gen_range(75.0..115.0);
    let (gx, gy) = (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
    let ripples: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            let period = rng.gen_range(180.0..400.0);
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            (rng.gen_range(4.0..10.0), angle.cos() / period, angle.sin() / period, rng.gen_range(0.0..6.3))
        })
        .collect();
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / width as f64 - 0.5, y as f64 / height as f64 - 0.5);
            let mut val = base + gx * u + gy * v;
            for &(amp, fx, fy, phase) in &ripples {
                val += amp * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64) + phase).sin();
            }
            data.push(val);
        }
    }
    data
}

/// One image with 1..=`max_discs` non-overlapping discs.
pub fn synthetic_case<R: Rng>(rng: &mut R, image_id: &str, cfg: &SyntheticConfig) -> SyntheticCase {
    let (w, h) = (cfg.width, cfg.height);
    let bg = background(rng, w, h);
    let clean = GrayImage::new(w, h, bg.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()).expect("dims");
    let want = rng.gen_range(1..=cfg.max_discs);
    let mut discs: Vec<Disc> = Vec::new();
    let mut attempts = 0;
    while discs.len() < want && attempts < 10_000 {
        attempts += 1;
        let radius = rng.gen_range(cfg.radius.0..=cfg.radius.1);
        let pad = radius + cfg.gap;
        if 2 * pad >= w || 2 * pad >= h {
            continue;
        }
        let cx = rng.gen_range(pad..w - pad);
        let cy = rng.gen_range(pad..h - pad);
        let clear = discs.iter().all(|d| {
            let dist = ((cx as f64 - d.cx as f64).powi(2) + (cy as f64 - d.cy as f64).powi(2)).sqrt();
            dist >= (radius + d.radius + cfg.gap) as f64
        });
        if clear {
            discs.push(Disc { cx, cy, radius, contrast: rng.gen_range(cfg.contrast.0..=cfg.contrast.1) });
        }
    }
    let dirty = GrayImage::from_fn(w, h, |x, y| {
        let v = clean.get(x, y);
        match discs.iter().find(|d| d.contains(x, y)) {
            Some(d) => v.saturating_add(d.contrast),
            None => v,
        }
    })
    .expect("dims");
    SyntheticCase { image_id: image_id.to_string(), clean, dirty, discs }
}

/// `n` cases named `synth_000`, `synth_001`, ... from one seed.
pub fn synthetic_suite(seed: u64, n: usize, cfg: &SyntheticConfig) -> Vec<SyntheticCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| synthetic_case(&mut rng, &format!("synth_{i:03}"), cfg)).collect()
}

/// Residual statistics of one disc region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscResidual {
    pub mean_abs: f64,
    pub max_abs: u8,
}

impl DiscResidual {
    /// A disc counts as removed when its region is close to the background
    /// on average and no pixel keeps half the disc's contrast.
    pub fn removed(&self, contrast: u8, mean_tolerance: f64) -> bool {
        self.mean_abs <= mean_tolerance && f64::from(self.max_abs) < f64::from(contrast) / 2.0
    }
}

/// Compares an inpainted output with the clean background, both in the
/// intensity scale of the normalized dirty image. The output must have the
/// case's dimensions.
pub fn disc_residuals(case: &SyntheticCase, output: &GrayImage) -> Vec<DiscResidual> {
    assert_eq!(output.dims(), case.dirty.dims(), "output must keep the synthetic image size");
    let (lo, hi) = case.dirty.min_max();
    let reference = normalize_with_range(&case.clean, lo, hi);
    let (w, h) = output.dims();
    // the same affine map scales the contrast
    case.discs
        .iter()
        .map(|d| {
            let (mut sum, mut n, mut max) = (0u64, 0u64, 0u8);
            for y in d.cy.saturating_sub(d.radius)..=(d.cy + d.radius).min(h - 1) {
                for x in d.cx.saturating_sub(d.radius)..=(d.cx + d.radius).min(w - 1) {
                    if d.contains(x, y) {
                        let r = output.get(x, y).abs_diff(reference.get(x, y));
                        sum += u64::from(r);
                        n += 1;
                        max = max.max(r);
                    }
                }
            }
            DiscResidual { mean_abs: sum as f64 / n.max(1) as f64, max_abs: max }
        })
        .collect()
}

/// A random union of discs and rectangles covering a modest share of a
/// `width`x`height` frame.
pub fn random_blob_mask<R: Rng>(rng: &mut R, width: usize, height: usize, blobs: usize) -> BinaryMask {
    let shapes: Vec<(bool, f64, f64, f64, f64)> = (0..blobs)
        .map(|_| {
            (
                rng.gen_bool(0.5),
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                rng.gen_range(1.0..(width.min(height) as f64 / 4.0).max(1.5)),
                rng.gen_range(1.0..(width.min(height) as f64 / 4.0).max(1.5)),
            )
        })
        .collect();
    BinaryMask::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        shapes.iter().any(|&(round, cx, cy, a, b)| {
            if round {
                ((px - cx) / a).powi(2) + ((py - cy) / b).powi(2) <= 1.0
            } else {
                (px - cx).abs() <= a && (py - cy).abs() <= b
            }
        })
    })
    .expect("non-zero dims")
}
