//! Core raster types shared by every pipeline stage.
//!
//! Intensities are stored as `f64` end to end; quantization to 8-bit
//! happens only at file I/O. All types are immutable values after
//! construction and every operation is a pure function.

use crate::error::{Error, Result};

pub mod io;

/// Single-channel 2-D raster of real-valued intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major data, validating geometry and finiteness.
    pub fn from_vec(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero dimension: {width}x{height}"
            )));
        }
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidRaster(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "non-finite value {} at index {pos}",
                data[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    /// All-zero image.
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        Self::from_vec(width, height, vec![0.0; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Reads with replicated-edge semantics: out-of-bounds coordinates clamp
    /// to the nearest border pixel.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(cx, cy)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Minimum and maximum intensity.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Row-major raster of {inside, outside} flags, paired with a [`GrayImage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn from_vec(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero dimension: {width}x{height}"
            )));
        }
        if bits.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidRaster(format!(
                "bit length {} != {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::from_vec(width, height, bits)
    }

    /// All-inside mask.
    pub fn filled(width: u32, height: u32) -> Result<Self> {
        Self::from_vec(width, height, vec![true; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn inside(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Number of `inside` pixels.
    pub fn count_inside(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Iterator over the coordinates of `inside` pixels, row-major order.
    pub fn inside_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }
}

fn check_dims(
    context: &'static str,
    lw: u32,
    lh: u32,
    rw: u32,
    rh: u32,
) -> Result<()> {
    if lw != rw || lh != rh {
        return Err(Error::DimensionMismatch {
            context,
            left_width: lw,
            left_height: lh,
            right_width: rw,
            right_height: rh,
        });
    }
    Ok(())
}

/// Linearly maps intensities onto [0, 255].
///
/// A constant image has no contrast to preserve and maps to all zeros.
pub fn rescale_to_255(img: &GrayImage) -> GrayImage {
    let (lo, hi) = img.min_max();
    let range = hi - lo;
    if range == 0.0 {
        return img.map(|_| 0.0);
    }
    // The ratio is computed first so the max maps to exactly 1.0 and no
    // rounding can push an output past 255.
    img.map(|v| 255.0 * ((v - lo) / range))
}

/// Zeroes every pixel outside the mask; inside pixels pass through.
pub fn apply_mask(img: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    check_dims(
        "apply_mask",
        img.width,
        img.height,
        mask.width,
        mask.height,
    )?;
    let data = img
        .data
        .iter()
        .zip(mask.bits.iter())
        .map(|(&v, &inside)| if inside { v } else { 0.0 })
        .collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data,
    })
}
