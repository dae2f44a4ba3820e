use super::{BinaryMask, BoundingBox, GrayImage, ImagingError, Result};

fn check_box(b: &BoundingBox, width: usize, height: usize) -> Result<()> {
    if b.fits_within(width, height) {
        Ok(())
    } else {
        Err(ImagingError::OutOfBounds { bbox: *b, width, height })
    }
}

fn crop_rows(data: &[u8], stride: usize, b: &BoundingBox) -> Vec<u8> {
    let mut out = Vec::with_capacity(b.area());
    for row in b.y..b.bottom() {
        out.extend_from_slice(&data[row * stride + b.x..row * stride + b.right()]);
    }
    out
}

/// Copies the pixels inside `b`; output pixel (i, j) is `img(b.x + i, b.y + j)`.
pub fn crop_roi(img: &GrayImage, b: &BoundingBox) -> Result<GrayImage> {
    check_box(b, img.width, img.height)?;
    Ok(GrayImage { width: b.w, height: b.h, data: crop_rows(&img.data, img.width, b) })
}

pub fn crop_mask(mask: &BinaryMask, b: &BoundingBox) -> Result<BinaryMask> {
    check_box(b, mask.width, mask.height)?;
    Ok(BinaryMask { width: b.w, height: b.h, data: crop_rows(&mask.data, mask.width, b) })
}

/// Writes `roi` back into a copy of `base` at `b`. Pixels outside `b` are untouched.
pub fn merge_roi(base: &GrayImage, roi: &GrayImage, b: &BoundingBox) -> Result<GrayImage> {
    if roi.dims() != (b.w, b.h) {
        return Err(ImagingError::DimensionMismatch { expected: (b.w, b.h), actual: roi.dims() });
    }
    check_box(b, base.width, base.height)?;
    let mut out = base.clone();
    for (j, row) in roi.data.chunks_exact(roi.width).enumerate() {
        let start = (b.y + j) * base.width + b.x;
        out.data[start..start + b.w].copy_from_slice(row);
    }
    Ok(out)
}
