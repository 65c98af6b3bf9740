//! 8-bit image file I/O: single-channel PNG and binary PGM (P5).
//!
//! Pixel values live as `f64` inside the pipeline; quantization to bytes
//! happens here and nowhere else.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage};

/// Threshold above which an 8-bit mask pixel counts as `inside`.
pub const MASK_INSIDE_THRESHOLD: u8 = 128;

fn open_luma8(path: &Path) -> Result<image::GrayImage> {
    let dynamic = image::open(path)?;
    Ok(dynamic.to_luma8())
}

fn gray_from_luma(luma: image::GrayImage) -> Result<GrayImage> {
    let (w, h) = luma.dimensions();
    GrayImage::from_vec(w, h, luma.into_raw().into_iter().map(f64::from).collect())
}

fn mask_from_luma(luma: image::GrayImage) -> Result<BinaryMask> {
    let (w, h) = luma.dimensions();
    BinaryMask::from_vec(
        w,
        h,
        luma.into_raw()
            .into_iter()
            .map(|v| v >= MASK_INSIDE_THRESHOLD)
            .collect(),
    )
}

/// Loads an 8-bit single-channel PNG or PGM into a [`GrayImage`].
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    gray_from_luma(open_luma8(path.as_ref())?)
}

/// [`load_gray`] for an already-read encoded file.
pub fn load_gray_bytes(bytes: &[u8]) -> Result<GrayImage> {
    gray_from_luma(image::load_from_memory(bytes)?.to_luma8())
}

/// Loads a mask: pixels with value >= 128 are `inside`.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    mask_from_luma(open_luma8(path.as_ref())?)
}

/// [`load_mask`] for an already-read encoded file.
pub fn load_mask_bytes(bytes: &[u8]) -> Result<BinaryMask> {
    mask_from_luma(image::load_from_memory(bytes)?.to_luma8())
}

/// Loads a 3-channel image into its planes, in (R, G, B) order.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<(GrayImage, GrayImage, GrayImage)> {
    let rgb = image::open(path.as_ref())?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let raw = rgb.into_raw();
    let plane = |offset: usize| -> Result<GrayImage> {
        GrayImage::from_vec(
            w,
            h,
            raw.iter()
                .skip(offset)
                .step_by(3)
                .map(|&v| f64::from(v))
                .collect(),
        )
    };
    Ok((plane(0)?, plane(1)?, plane(2)?))
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Saves an image as 8-bit grayscale; the format follows the file extension
/// (`.png` or `.pgm`). Values are rounded and clamped to [0, 255].
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = img.as_slice().iter().map(|&v| quantize(v)).collect();
    let buffer = image::GrayImage::from_raw(img.width(), img.height(), bytes)
        .expect("buffer length matches dimensions");
    buffer.save(path.as_ref())?;
    Ok(())
}

/// Saves a mask as 8-bit grayscale (inside = 255, outside = 0).
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask
        .as_slice()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    let buffer = image::GrayImage::from_raw(mask.width(), mask.height(), bytes)
        .expect("buffer length matches dimensions");
    buffer.save(path.as_ref())?;
    Ok(())
}

/// Saves three planes as one RGB image; planes must share dimensions.
pub fn save_rgb(r: &GrayImage, g: &GrayImage, b: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    if r.width() != g.width()
        || r.width() != b.width()
        || r.height() != g.height()
        || r.height() != b.height()
    {
        return Err(Error::DimensionMismatch {
            context: "save_rgb",
            left_width: r.width(),
            left_height: r.height(),
            right_width: g.width().max(b.width()),
            right_height: g.height().max(b.height()),
        });
    }
    let mut bytes = Vec::with_capacity(r.as_slice().len() * 3);
    for i in 0..r.as_slice().len() {
        bytes.push(quantize(r.as_slice()[i]));
        bytes.push(quantize(g.as_slice()[i]));
        bytes.push(quantize(b.as_slice()[i]));
    }
    let buffer = image::RgbImage::from_raw(r.width(), r.height(), bytes)
        .expect("buffer length matches dimensions");
    buffer.save(path.as_ref())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_round_trip_png_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(13, 7, |x, y| ((x * 19 + y * 5) % 256) as f64).unwrap();
        for name in ["rt.png", "rt.pgm"] {
            let path = dir.path().join(name);
            save_gray(&img, &path).unwrap();
            let back = load_gray(&path).unwrap();
            assert_eq!(back, img, "round trip through {name}");
        }
    }

    #[test]
    fn mask_round_trip_and_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let mask = BinaryMask::from_fn(9, 4, |x, y| (x + y) % 3 != 0).unwrap();
        let path = dir.path().join("mask.png");
        save_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);

        // 127 is outside, 128 is inside
        let gray = GrayImage::from_vec(2, 1, vec![127.0, 128.0]).unwrap();
        let path = dir.path().join("edge.png");
        save_gray(&gray, &path).unwrap();
        let m = load_mask(&path).unwrap();
        assert!(!m.inside(0, 0));
        assert!(m.inside(1, 0));
    }

    #[test]
    fn byte_loads_match_path_loads() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(6, 5, |x, y| ((x * 31 + y * 7) % 256) as f64).unwrap();
        let path = dir.path().join("img.png");
        save_gray(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(load_gray_bytes(&bytes).unwrap(), load_gray(&path).unwrap());

        let mask = BinaryMask::from_fn(6, 5, |x, _| x % 2 == 0).unwrap();
        let mpath = dir.path().join("mask.png");
        save_mask(&mask, &mpath).unwrap();
        let mbytes = std::fs::read(&mpath).unwrap();
        assert_eq!(load_mask_bytes(&mbytes).unwrap(), mask);
    }

    #[test]
    fn rgb_round_trip_splits_planes() {
        let dir = tempfile::tempdir().unwrap();
        let r = GrayImage::from_fn(4, 3, |x, y| (x * 10 + y) as f64).unwrap();
        let g = GrayImage::from_fn(4, 3, |x, y| (100 + x + y * 10) as f64).unwrap();
        let b = GrayImage::from_fn(4, 3, |x, _| (200 + x) as f64).unwrap();
        let path = dir.path().join("stack.png");
        save_rgb(&r, &g, &b, &path).unwrap();
        let (r2, g2, b2) = load_rgb(&path).unwrap();
        assert_eq!(r2, r);
        assert_eq!(g2, g);
        assert_eq!(b2, b);
    }

    #[test]
    fn quantization_clamps() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_vec(3, 1, vec![-5.0, 300.0, 100.4]).unwrap();
        let path = dir.path().join("clamp.png");
        save_gray(&img, &path).unwrap();
        let back = load_gray(&path).unwrap();
        assert_eq!(back.as_slice(), &[0.0, 255.0, 100.0]);
    }
}
