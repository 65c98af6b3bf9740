//! Intensity-relative gradient magnitude map.

use crate::imaging::{rescale_to_255, GrayImage};

/// Intensities at or below this are treated as zero to avoid division
/// blow-up.
pub const INTENSITY_EPSILON: f64 = 1e-6;

/// Gradient magnitude divided by local intensity, before rescaling.
///
/// Central differences with replicated borders; pixels whose intensity is
/// at or below `INTENSITY_EPSILON` map to zero.
pub fn gradient_map_raw(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        if v <= INTENSITY_EPSILON {
            return 0.0;
        }
        let x = i64::from(x);
        let y = i64::from(y);
        let gx = (img.get_clamped(x + 1, y) - img.get_clamped(x - 1, y)) / 2.0;
        let gy = (img.get_clamped(x, y + 1) - img.get_clamped(x, y - 1)) / 2.0;
        gx.hypot(gy) / v
    })
    .expect("source dimensions are valid")
}

/// `gradient_map_raw` rescaled to [0, 255].
pub fn gradient_map(img: &GrayImage) -> GrayImage {
    rescale_to_255(&gradient_map_raw(img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_zero_map() {
        let img = GrayImage::from_fn(16, 12, |_, _| 77.0).unwrap();
        let raw = gradient_map_raw(&img);
        assert!(raw.as_slice().iter().all(|&v| v == 0.0));
        let scaled = gradient_map(&img);
        assert!(scaled.as_slice().iter().all(|&v| v == 0.0));
    }

    /// Horizontal ramp f(x, y) = x + 1: interior pixels see |g| = 1 and the
    /// raw map equals 1 / (x + 1). Oracle is the stencil evaluated by hand.
    #[test]
    fn ramp_matches_stencil_oracle() {
        let img = GrayImage::from_fn(32, 8, |x, _| f64::from(x) + 1.0).unwrap();
        let raw = gradient_map_raw(&img);
        for y in 0..8 {
            for x in 1..31 {
                let expected = 1.0 / (f64::from(x) + 1.0);
                assert!(
                    (raw.get(x, y) - expected).abs() < 1e-12,
                    "at ({x}, {y}): {} vs {expected}",
                    raw.get(x, y)
                );
            }
            // Replicated border halves the difference quotient.
            assert!((raw.get(0, y) - 0.5).abs() < 1e-12);
            let expected_last = 0.5 / 32.0;
            assert!((raw.get(31, y) - expected_last).abs() < 1e-12);
        }
    }

    /// A bright pixel over a faint floor lights up exactly its 4-neighbors:
    /// the center has symmetric differences, diagonals see no change along
    /// either axis.
    #[test]
    fn bright_pixel_ring_is_four_connected() {
        let (cx, cy) = (5u32, 6u32);
        let img = GrayImage::from_fn(11, 13, |x, y| {
            if (x, y) == (cx, cy) {
                200.0
            } else {
                1.0
            }
        })
        .unwrap();
        let raw = gradient_map_raw(&img);
        for y in 0..13 {
            for x in 0..11 {
                let manhattan =
                    (i64::from(x) - i64::from(cx)).abs() + (i64::from(y) - i64::from(cy)).abs();
                if manhattan == 1 {
                    assert!(raw.get(x, y) > 0.0, "expected nonzero at ({x}, {y})");
                } else {
                    assert_eq!(raw.get(x, y), 0.0, "expected zero at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn zero_intensity_pixels_map_to_zero() {
        // Steep ramp into a zero-valued column: no division blow-up.
        let img = GrayImage::from_fn(8, 8, |x, _| if x == 3 { 0.0 } else { 1000.0 }).unwrap();
        let raw = gradient_map_raw(&img);
        for y in 0..8 {
            assert_eq!(raw.get(3, y), 0.0);
            assert!(raw.as_slice().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn rescaled_map_spans_range() {
        let img = GrayImage::from_fn(32, 8, |x, _| f64::from(x) + 1.0).unwrap();
        let scaled = gradient_map(&img);
        let (lo, hi) = scaled.min_max();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 255.0);
    }
}
