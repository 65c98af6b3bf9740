//! Geometric features: axis-derived shape terms plus dark-hole area ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage};
use crate::normalize::EllipseFit;

/// Hole-ratio thresholds: 3, 6, ..., 30.
pub const BLOCK_THRESHOLD_COUNT: usize = 10;

/// Shape terms from the ellipse axes plus hole-area ratios from the
/// normalized intensity image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricFeatures {
    /// [L1, L2, L1/L2, L1*L2, L1+L2, L1^2+L2^2, L1-L2, L1^2-L2^2]
    pub v_shape: [f64; 8],
    /// v_block[i] = fraction of inside-mask pixels strictly below 3(i+1).
    pub v_block: [f64; BLOCK_THRESHOLD_COUNT],
}

impl GeometricFeatures {
    pub const LEN: usize = 8 + BLOCK_THRESHOLD_COUNT;

    /// Shape terms followed by block terms.
    pub fn concat(&self) -> Vec<f64> {
        self.v_shape.iter().chain(&self.v_block).copied().collect()
    }
}

/// Computes the geometric feature vector.
///
/// `fit` must come from the original-resolution mask: normalization maps
/// both axes to the same length, so post-normalization axes carry no size
/// information. `img` and `mask` are the normalized, [0,255]-rescaled
/// image and its mask; hole ratios count inside-mask pixels strictly below
/// each threshold.
pub fn geometric_features(
    img: &GrayImage,
    mask: &BinaryMask,
    fit: &EllipseFit,
) -> Result<GeometricFeatures> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            context: "geometric features image/mask",
            left_width: img.width(),
            left_height: img.height(),
            right_width: mask.width(),
            right_height: mask.height(),
        });
    }
    let total = mask.count_inside();
    if total == 0 {
        return Err(Error::DegenerateRegion(
            "geometric features need a nonempty mask".into(),
        ));
    }

    let l1 = fit.major_axis;
    let l2 = fit.minor_axis;
    let v_shape = [
        l1,
        l2,
        l1 / l2,
        l1 * l2,
        l1 + l2,
        l1 * l1 + l2 * l2,
        l1 - l2,
        l1 * l1 - l2 * l2,
    ];

    let mut counts = [0usize; BLOCK_THRESHOLD_COUNT];
    for (x, y) in mask.inside_pixels() {
        let v = img.get(x, y);
        for (i, c) in counts.iter_mut().enumerate() {
            if v < (3 * (i + 1)) as f64 {
                *c += 1;
            }
        }
    }
    let mut v_block = [0.0f64; BLOCK_THRESHOLD_COUNT];
    for i in 0..BLOCK_THRESHOLD_COUNT {
        v_block[i] = counts[i] as f64 / total as f64;
    }

    Ok(GeometricFeatures { v_shape, v_block })
}
