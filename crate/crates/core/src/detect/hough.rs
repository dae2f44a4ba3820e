//! Circular Hough transform with gradient-direction voting.
//!
//! Edges come from a 3x3 Sobel operator thinned by non-maximum suppression
//! along the gradient. Each edge pixel casts one vote per candidate radius at
//! the point `r` pixels along its gradient, i.e. towards the brighter side,
//! which is where the centre of a radio-opaque object lies. A cell's score
//! is the vote total of its 3x3 neighbourhood in the same radius layer.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DetectError, Detection, Result};
use crate::imaging::{BoundingBox, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChtConfig {
    pub min_radius: usize,
    pub max_radius: usize,
    /// Minimum Sobel gradient magnitude for an edge pixel.
    pub edge_magnitude_threshold: f64,
    /// Fraction of the ideal vote count (the circumference `2*pi*r`) a peak needs.
    pub accumulator_peak_threshold: f64,
}

impl Default for ChtConfig {
    fn default() -> Self {
        Self { min_radius: 5, max_radius: 13, edge_magnitude_threshold: 100.0, accumulator_peak_threshold: 0.5 }
    }
}

impl ChtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_radius < 1 || self.min_radius > self.max_radius {
            return Err(DetectError::Config(format!(
                "radius range [{}, {}] invalid",
                self.min_radius, self.max_radius
            )));
        }
        if !(self.accumulator_peak_threshold > 0.0 && self.accumulator_peak_threshold <= 1.0) {
            return Err(DetectError::Config(format!(
                "accumulator_peak_threshold {} outside (0, 1]",
                self.accumulator_peak_threshold
            )));
        }
        if self.edge_magnitude_threshold.is_nan() || self.edge_magnitude_threshold < 0.0 {
            return Err(DetectError::Config("edge_magnitude_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

/// A detected circle in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub cx: usize,
    pub cy: usize,
    pub radius: usize,
    pub votes: u32,
    pub confidence: f64,
}

impl Circle {
    /// Tight bounding square clipped to the frame.
    pub fn bounding_box(&self, width: usize, height: usize) -> Option<BoundingBox> {
        let r = self.radius as i64;
        BoundingBox::clipped(self.cx as i64 - r, self.cy as i64 - r, 2 * r + 1, 2 * r + 1, width, height)
    }
}

struct EdgePixel {
    x: usize,
    y: usize,
    ux: f64,
    uy: f64,
}

fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = img.dims();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let p = |x: usize, y: usize| f64::from(img.get(x, y));
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            gx[y * w + x] = (p(x + 1, y - 1) + 2.0 * p(x + 1, y) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x - 1, y) + p(x - 1, y + 1));
            gy[y * w + x] = (p(x - 1, y + 1) + 2.0 * p(x, y + 1) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x, y - 1) + p(x + 1, y - 1));
        }
    }
    (gx, gy)
}

fn thin_edges(img: &GrayImage, threshold: f64) -> Vec<EdgePixel> {
    let (w, h) = img.dims();
    let (gx, gy) = sobel(img);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let mut edges = Vec::new();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 || m < threshold {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let before = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            let after = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            // strict on one side so a symmetric two-pixel ridge keeps one pixel
            if m > before && m >= after {
                edges.push(EdgePixel { x, y, ux: gx[i] / m, uy: gy[i] / m });
            }
        }
    }
    edges
}

/// Ideal vote count for radius `r`.
fn ideal_votes(r: usize) -> f64 {
    2.0 * PI * r as f64
}

/// Circles found by the transform, strongest first.
pub fn cht_circles(img: &GrayImage, cfg: &ChtConfig) -> Result<Vec<Circle>> {
    cfg.validate()?;
    let (w, h) = img.dims();
    let needed = 2 * cfg.max_radius + 1;
    if w < needed || h < needed {
        return Err(DetectError::ImageTooSmall { width: w, height: h, needed });
    }
    let edges = thin_edges(img, cfg.edge_magnitude_threshold);
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    let radii: Vec<usize> = (cfg.min_radius..=cfg.max_radius).collect();
    let layer = w * h;
    let mut acc = vec![0u32; radii.len() * layer];
    for e in &edges {
        for (k, &r) in radii.iter().enumerate() {
            let cx = (e.x as f64 + r as f64 * e.ux).round();
            let cy = (e.y as f64 + r as f64 * e.uy).round();
            if cx >= 0.0 && cy >= 0.0 && (cx as usize) < w && (cy as usize) < h {
                acc[k * layer + cy as usize * w + cx as usize] += 1;
            }
        }
    }

    let mut candidates: Vec<Circle> = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let plane = &acc[k * layer..(k + 1) * layer];
        let min_votes = (cfg.accumulator_peak_threshold * ideal_votes(r)).ceil() as u32;
        for y in 0..h {
            for x in 0..w {
                if plane[y * w + x] == 0 {
                    continue;
                }
                let mut score = 0;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        score += plane[yy * w + xx];
                    }
                }
                if score >= min_votes {
                    let confidence = (f64::from(score) / ideal_votes(r)).min(1.0);
                    candidates.push(Circle { cx: x, cy: y, radius: r, votes: score, confidence });
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(a.cy.cmp(&b.cy))
            .then(a.cx.cmp(&b.cx))
            .then(a.radius.cmp(&b.radius))
    });

    let mut kept: Vec<Circle> = Vec::new();
    for c in candidates {
        let clear = kept.iter().all(|k| {
            let dx = c.cx as f64 - k.cx as f64;
            let dy = c.cy as f64 - k.cy as f64;
            dx.hypot(dy) >= c.radius.max(k.radius) as f64
        });
        if clear {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// Runs [`cht_circles`] and reports each circle's bounding square.
pub fn cht_detect(img: &GrayImage, cfg: &ChtConfig) -> Result<Vec<Detection>> {
    let (w, h) = img.dims();
    cht_circles(img, cfg)?
        .into_iter()
        .filter_map(|c| c.bounding_box(w, h).map(|b| Detection::new(b, c.confidence)))
        .collect()
}
