//! Fast-marching inpainting of masked foreign-object pixels.

mod fmm;
mod telea;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::ImagingError;

pub use fmm::{fmm_distance, DistanceField, PixelState};
pub use telea::{inpaint_objects, telea_inpaint};

#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("mask {width}x{height} is smaller than 3x3")]
    MaskTooSmall { width: usize, height: usize },
    #[error("image is {image:?} but mask is {mask:?}")]
    DimensionMismatch { image: (usize, usize), mask: (usize, usize) },
    #[error("mask covers the whole image; nothing to propagate from")]
    NoKnownNeighbors,
    #[error("inpaint radius must be at least 1")]
    InvalidRadius,
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, InpaintError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InpaintConfig {
    /// Radius (pixels) of the circular neighbourhood feeding each inpainted pixel.
    #[serde(alias = "radius_t")]
    pub radius: usize,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self { radius: 5 }
    }
}

impl InpaintConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(InpaintError::InvalidRadius);
        }
        Ok(())
    }
}
