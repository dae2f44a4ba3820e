//! PNG / binary PGM (P5) reading and writing.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageError, ImageFormat, ImageReader};

use super::{BinaryMask, GrayImage, ImagingError, ProbabilityMap, Result};
use crate::Scalar;

fn decode(path: &Path) -> Result<DynamicImage> {
    let parse_err = |source: ImageError| ImagingError::Parse { path: path.display().to_string(), source };
    ImageReader::open(path)
        .and_then(|r| r.with_guessed_format())
        .map_err(|e| parse_err(ImageError::IoError(e)))?
        .decode()
        .map_err(parse_err)
}

/// Reads an image as 8-bit grayscale. Colour inputs are converted to luma.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = decode(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::new(w as usize, h as usize, img.into_raw())
}

/// Reads a mask file; every pixel must already be 0 or 255.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = decode(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    BinaryMask::new(w as usize, h as usize, img.into_raw())
}

/// Reads an 8- or 16-bit grayscale file, scaling by the format maximum into [0, 1].
pub fn read_probability_map<F: Scalar>(path: impl AsRef<Path>) -> Result<ProbabilityMap<F>> {
    match decode(path.as_ref())? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let scale = F::of(255.0);
            let data = buf.into_raw().into_iter().map(|v| F::of(f64::from(v)) / scale).collect();
            ProbabilityMap::new(w as usize, h as usize, data)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            let scale = F::of(65535.0);
            let data = buf.into_raw().into_iter().map(|v| F::of(f64::from(v)) / scale).collect();
            ProbabilityMap::new(w as usize, h as usize, data)
        }
        other => Err(ImagingError::UnsupportedBitDepth(format!("{:?}", other.color()))),
    }
}

fn write_luma8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let write_err = |source: ImageError| ImagingError::Write { path: path.display().to_string(), source };
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let file = File::create(path).map_err(|e| write_err(ImageError::IoError(e)))?;
        PnmEncoder::new(BufWriter::new(file))
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(data, width as u32, height as u32, ExtendedColorType::L8)
            .map_err(write_err)
    } else {
        image::save_buffer_with_format(path, data, width as u32, height as u32, ExtendedColorType::L8, ImageFormat::Png)
            .map_err(write_err)
    }
}

/// Writes PNG, or binary PGM when the extension is `.pgm`.
pub fn write_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_luma8(path.as_ref(), img.width(), img.height(), img.data())
}

pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_luma8(path.as_ref(), mask.width(), mask.height(), mask.data())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pgm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 30 + y) as u8).unwrap();
        for name in ["a.png", "a.pgm"] {
            let p = dir.path().join(name);
            write_gray(&img, &p).unwrap();
            assert_eq!(read_gray(&p).unwrap(), img);
        }
        let pgm = std::fs::read(dir.path().join("a.pgm")).unwrap();
        assert!(pgm.starts_with(b"P5"));
    }

    #[test]
    fn probability_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.png");
        write_gray(&GrayImage::new(2, 1, vec![255, 128]).unwrap(), &p).unwrap();
        let map: ProbabilityMap<f64> = read_probability_map(&p).unwrap();
        assert_eq!(map.get(0, 0), 1.0);
        assert!((map.get(1, 0) - 128.0 / 255.0).abs() < 1e-12);

        let p16 = dir.path().join("p16.png");
        let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![65535u16, 0]).unwrap();
        buf.save(&p16).unwrap();
        let map16: ProbabilityMap<f32> = read_probability_map(&p16).unwrap();
        assert_eq!(map16.data(), &[1.0, 0.0]);

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::new(2, 2).save(&rgb).unwrap();
        assert!(matches!(read_probability_map::<f64>(&rgb), Err(ImagingError::UnsupportedBitDepth(_))));
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.png");
        write_gray(&GrayImage::filled(16, 16, 9).unwrap(), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(read_probability_map::<f64>(&p), Err(ImagingError::Parse { .. })));
        assert!(matches!(read_gray(dir.path().join("missing.png")), Err(ImagingError::Parse { .. })));
    }

    #[test]
    fn masks_must_be_binary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        write_mask(&BinaryMask::from_fn(3, 3, |x, _| x == 1).unwrap(), &p).unwrap();
        assert_eq!(read_mask(&p).unwrap().count_on(), 3);
        write_gray(&GrayImage::filled(3, 3, 9).unwrap(), &p).unwrap();
        assert!(matches!(read_mask(&p), Err(ImagingError::NotBinary(9))));
    }
}
