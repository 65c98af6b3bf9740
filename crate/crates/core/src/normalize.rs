//! Kidney normalization: fit an ellipse to the mask, reorient the image
//! along the major axis, rescale into a fixed frame, and zero the
//! background.
//!
//! The ellipse is the moment-equivalent ellipse of the mask region: the
//! ellipse whose second-order central moments match the region's. Its
//! full axis lengths are `4 * sqrt(lambda)` for the two eigenvalues of the
//! moment covariance.
//!
//! Angle convention: `theta` is measured from the +X axis toward +Y, with
//! the row index increasing downward, and lies in (-pi/2, pi/2]. Rotating
//! a raster by `phi` in that frame shifts `theta` by `phi` (mod pi).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{apply_mask, BinaryMask, GrayImage};

/// Minimum number of inside pixels for a meaningful fit.
pub const MIN_REGION_PIXELS: usize = 8;

/// Relative anisotropy below which a region counts as circular and its
/// orientation is reported as 0 (it is unconstrained; a fixed value keeps
/// re-normalization stable).
const CIRCULAR_ANISOTROPY: f64 = 0.04;

/// Moment-equivalent ellipse of a mask region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    /// Subpixel center (centroid of inside pixels).
    pub center_x: f64,
    pub center_y: f64,
    /// Full major-axis length in pixels.
    pub major_axis: f64,
    /// Full minor-axis length in pixels.
    pub minor_axis: f64,
    /// Orientation of the major axis in radians, in (-pi/2, pi/2].
    pub theta: f64,
}

impl EllipseFit {
    pub fn aspect_ratio(&self) -> f64 {
        self.major_axis / self.minor_axis
    }
}

/// Image and mask warped into the fixed `n0 x n0` frame, with the fit that
/// produced them.
#[derive(Debug, Clone)]
pub struct NormalizedImage {
    pub image: GrayImage,
    pub mask: BinaryMask,
    pub source_fit: EllipseFit,
}

impl NormalizedImage {
    pub fn size(&self) -> u32 {
        self.image.width()
    }
}

/// Fits the moment-equivalent ellipse to the mask's inside region.
pub fn fit_ellipse(mask: &BinaryMask) -> Result<EllipseFit> {
    let count = mask.count_inside();
    if count < MIN_REGION_PIXELS {
        return Err(Error::DegenerateRegion(format!(
            "{count} inside pixels, need at least {MIN_REGION_PIXELS}"
        )));
    }

    let n = count as f64;
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for (x, y) in mask.inside_pixels() {
        sum_x += f64::from(x);
        sum_y += f64::from(y);
    }
    let cx = sum_x / n;
    let cy = sum_y / n;

    let mut mu20 = 0.0;
    let mut mu02 = 0.0;
    let mut mu11 = 0.0;
    for (x, y) in mask.inside_pixels() {
        let dx = f64::from(x) - cx;
        let dy = f64::from(y) - cy;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    mu20 /= n;
    mu02 /= n;
    mu11 /= n;

    let trace = mu20 + mu02;
    let diff = mu20 - mu02;
    let cross = 2.0 * mu11;
    let root = (diff * diff + cross * cross).sqrt();
    let lambda_max = 0.5 * (trace + root);
    let lambda_min = 0.5 * (trace - root);

    if lambda_min < 1e-9 {
        return Err(Error::DegenerateRegion(
            "inside pixels are collinear".to_string(),
        ));
    }

    let mut theta = if root < CIRCULAR_ANISOTROPY * trace {
        0.0
    } else {
        0.5 * cross.atan2(diff)
    };
    // atan2 yields (-pi, pi]; halving gives (-pi/2, pi/2]. Guard the open
    // end against rounding.
    if theta <= -std::f64::consts::FRAC_PI_2 {
        theta += std::f64::consts::PI;
    }

    Ok(EllipseFit {
        center_x: cx,
        center_y: cy,
        major_axis: 4.0 * lambda_max.sqrt(),
        minor_axis: 4.0 * lambda_min.sqrt(),
        theta,
    })
}

/// Reorients the image along the fitted major axis, maps the ellipse onto
/// a centered circle of diameter `margin * n0`, and zeroes the background.
///
/// Intensities are sampled bilinearly; the mask is sampled nearest-neighbor
/// so it stays binary.
pub fn normalize_kidney(
    img: &GrayImage,
    mask: &BinaryMask,
    fit: &EllipseFit,
    n0: u32,
    margin: f64,
) -> Result<NormalizedImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            context: "normalize_kidney",
            left_width: img.width(),
            left_height: img.height(),
            right_width: mask.width(),
            right_height: mask.height(),
        });
    }
    if n0 < 32 {
        return Err(Error::InvalidParameter(format!(
            "output size {n0} below minimum 32"
        )));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} outside (0, 1]"
        )));
    }

    let (sin_t, cos_t) = fit.theta.sin_cos();
    // Inverse of the forward map q = S * R(-theta) * (p - c) + c_out.
    let inv_sx = fit.major_axis / (margin * f64::from(n0));
    let inv_sy = fit.minor_axis / (margin * f64::from(n0));
    let c_out = (f64::from(n0) - 1.0) / 2.0;

    let source_point = |u: u32, v: u32| -> (f64, f64) {
        let qx = (f64::from(u) - c_out) * inv_sx;
        let qy = (f64::from(v) - c_out) * inv_sy;
        (
            fit.center_x + cos_t * qx - sin_t * qy,
            fit.center_y + sin_t * qx + cos_t * qy,
        )
    };

    let out_mask = BinaryMask::from_fn(n0, n0, |u, v| {
        let (x, y) = source_point(u, v);
        let xi = x.round() as i64;
        let yi = y.round() as i64;
        xi >= 0
            && yi >= 0
            && xi < i64::from(mask.width())
            && yi < i64::from(mask.height())
            && mask.inside(xi as u32, yi as u32)
    })?;

    let out_image = GrayImage::from_fn(n0, n0, |u, v| {
        let (x, y) = source_point(u, v);
        bilinear(img, x, y)
    })?;

    Ok(NormalizedImage {
        image: apply_mask(&out_image, &out_mask)?,
        mask: out_mask,
        source_fit: *fit,
    })
}

/// Bilinear sample; coordinates outside the raster read as 0.
fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as i64;
    let y0 = y0 as i64;

    let sample = |xi: i64, yi: i64| -> f64 {
        if xi < 0 || yi < 0 || xi >= i64::from(img.width()) || yi >= i64::from(img.height()) {
            0.0
        } else {
            img.get(xi as u32, yi as u32)
        }
    };

    let top = sample(x0, y0) * (1.0 - fx) + sample(x0 + 1, y0) * fx;
    let bottom = sample(x0, y0 + 1) * (1.0 - fx) + sample(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}
