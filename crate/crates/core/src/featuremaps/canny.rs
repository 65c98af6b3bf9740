//! Canny edge detection with magnitude-relative thresholds.

use crate::error::{Error, Result};
use crate::featuremaps::EdgeMap;
use crate::imaging::GrayImage;

/// Runs the Canny detector.
///
/// `low_frac` and `high_frac` are fractions of the maximum gradient
/// magnitude, so scaling or shifting the intensities leaves the edge set
/// unchanged. Requires `0 < low_frac < high_frac <= 1`. A zero-gradient
/// image yields an empty edge set.
pub fn canny_edges(
    img: &GrayImage,
    sigma: f64,
    low_frac: f64,
    high_frac: f64,
) -> Result<EdgeMap> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "canny sigma must be positive, got {sigma}"
        )));
    }
    if !(low_frac > 0.0 && low_frac < high_frac && high_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "canny thresholds must satisfy 0 < low < high <= 1, got ({low_frac}, {high_frac})"
        )));
    }

    let w = img.width() as usize;
    let h = img.height() as usize;
    let blurred = gaussian_blur(img, sigma);
    let (gx, gy) = sobel(&blurred);

    let mut mag = vec![0.0f64; w * h];
    let mut max_mag = 0.0f64;
    for i in 0..w * h {
        mag[i] = gx[i].hypot(gy[i]);
        max_mag = max_mag.max(mag[i]);
    }
    if max_mag <= 0.0 {
        return EdgeMap::empty(img.width(), img.height());
    }
    let low = low_frac * max_mag;
    let high = high_frac * max_mag;

    // Non-maximum suppression along the quantized gradient direction.
    // Border pixels are always suppressed. On an exact tie along the
    // direction, the pixel with the smaller raster index survives.
    let mut thin = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            if mag[i] < low {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees();
            // Fold into [0, 180) and pick one of 4 directions.
            let angle = if angle < 0.0 { angle + 180.0 } else { angle };
            let (prev, next) = if !(22.5..157.5).contains(&angle) {
                (mag[i - 1], mag[i + 1]) // horizontal gradient
            } else if angle < 67.5 {
                (mag[i - w - 1], mag[i + w + 1]) // diagonal
            } else if angle < 112.5 {
                (mag[i - w], mag[i + w]) // vertical gradient
            } else {
                (mag[i - w + 1], mag[i + w - 1]) // anti-diagonal
            };
            if mag[i] > prev && mag[i] >= next {
                thin[i] = mag[i];
            }
        }
    }

    // Hysteresis: strong pixels seed 8-connected growth through weak ones.
    let mut edge = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..w * h {
        if thin[i] >= high && !edge[i] {
            edge[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let x = j % w;
                let y = j / w;
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let k = ny * w + nx;
                        if !edge[k] && thin[k] >= low {
                            edge[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }

    EdgeMap::from_fn(img.width(), img.height(), |x, y| {
        edge[y as usize * w + x as usize]
    })
}

/// Separable Gaussian blur with replicated borders. Kernel half-width is
/// `ceil(3 * sigma)`.
fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for t in -radius..=radius {
        kernel.push((-0.5 * (t as f64 / sigma).powi(2)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }

    let horizontal = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(idx, &k)| k * img.get_clamped(i64::from(x) + idx as i64 - radius, i64::from(y)))
            .sum()
    })
    .expect("source dimensions are valid");
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(idx, &k)| {
                k * horizontal.get_clamped(i64::from(x), i64::from(y) + idx as i64 - radius)
            })
            .sum()
    })
    .expect("source dimensions are valid")
}

/// 3x3 Sobel derivatives with replicated borders.
fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| img.get_clamped(x + dx, y + dy);
            let i = y as usize * w + x as usize;
            gx[i] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[i] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    (gx, gy)
}
