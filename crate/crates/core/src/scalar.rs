use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by distance fields, inpainting weights and
/// metric aggregates. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless for the integer and small-fraction constants used in this crate.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Round half up and clamp into the 8-bit intensity range.
pub fn quantize<F: Scalar>(v: F) -> u8 {
    if v.is_nan() {
        return 0;
    }
    let r = (v + F::of(0.5)).floor();
    if r <= F::zero() {
        0
    } else if r >= F::of(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(0)
    }
}
