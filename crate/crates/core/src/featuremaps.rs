//! Feature-map synthesis: gradient map, Canny edge map, distance-transform
//! map, and the 3-channel pseudo-color stack fed to the CNN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{apply_mask, rescale_to_255, GrayImage};
use crate::normalize::NormalizedImage;

mod canny;
mod distance;
mod gradient;

pub use canny::canny_edges;
pub use distance::{distance_feature_map, squared_distance_map};
pub use gradient::{gradient_map, gradient_map_raw};

/// Binary map of edge pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    count: usize,
}

impl EdgeMap {
    /// Builds an edge map from a predicate over pixel coordinates.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero dimension: {width}x{height}"
            )));
        }
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        let mut count = 0;
        for y in 0..height {
            for x in 0..width {
                let b = f(x, y);
                count += usize::from(b);
                bits.push(b);
            }
        }
        Ok(Self {
            width,
            height,
            bits,
            count,
        })
    }

    /// Edge map with no edges.
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::from_fn(width, height, |_, _| false)
    }

    /// Builds an edge map from explicit coordinates; out-of-bounds
    /// coordinates are rejected.
    pub fn from_points(width: u32, height: u32, points: &[(u32, u32)]) -> Result<Self> {
        for &(x, y) in points {
            if x >= width || y >= height {
                return Err(Error::InvalidRaster(format!(
                    "edge pixel ({x}, {y}) outside {width}x{height}"
                )));
            }
        }
        Self::from_fn(width, height, |x, y| points.contains(&(x, y)))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn is_edge(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Number of edge pixels.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Iterator over edge pixel coordinates, row-major.
    pub fn edge_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }
}

/// Canny detector parameters. Thresholds are fractions of the maximum
/// gradient magnitude, which makes the edge set invariant to affine
/// intensity changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyConfig {
    pub sigma: f64,
    pub low_frac: f64,
    pub high_frac: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low_frac: 0.1,
            high_frac: 0.2,
        }
    }
}

/// Which quantity fills the distance channel before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Euclidean distance to the nearest edge pixel.
    #[default]
    Euclidean,
    /// Squared Euclidean distance.
    Squared,
}

/// The 3-plane pseudo-color image: intensity, gradient, and distance
/// channels, each rescaled to [0, 255].
#[derive(Debug, Clone)]
pub struct ChannelStack {
    r: GrayImage,
    g: GrayImage,
    b: GrayImage,
}

impl ChannelStack {
    pub fn new(r: GrayImage, g: GrayImage, b: GrayImage) -> Result<Self> {
        for (name, plane) in [("g", &g), ("b", &b)] {
            if plane.width() != r.width() || plane.height() != r.height() {
                return Err(Error::DimensionMismatch {
                    context: match name {
                        "g" => "channel stack r/g",
                        _ => "channel stack r/b",
                    },
                    left_width: r.width(),
                    left_height: r.height(),
                    right_width: plane.width(),
                    right_height: plane.height(),
                });
            }
        }
        for plane in [&r, &g, &b] {
            let (lo, hi) = plane.min_max();
            if lo < 0.0 || hi > 255.0 {
                return Err(Error::InvalidRaster(format!(
                    "channel values [{lo}, {hi}] outside [0, 255]"
                )));
            }
        }
        Ok(Self { r, g, b })
    }

    pub fn r(&self) -> &GrayImage {
        &self.r
    }

    pub fn g(&self) -> &GrayImage {
        &self.g
    }

    pub fn b(&self) -> &GrayImage {
        &self.b
    }

    pub fn width(&self) -> u32 {
        self.r.width()
    }

    pub fn height(&self) -> u32 {
        self.r.height()
    }
}

/// Assembles the 3-channel stack from a normalized kidney image.
///
/// Each plane is masked to the kidney region first and rescaled to
/// [0, 255] second.
pub fn build_stack(
    norm: &NormalizedImage,
    canny: &CannyConfig,
    distance_mode: DistanceMode,
) -> Result<ChannelStack> {
    let masked = |img: &GrayImage| -> Result<GrayImage> {
        Ok(rescale_to_255(&apply_mask(img, &norm.mask)?))
    };

    let r = masked(&norm.image)?;
    let g = masked(&gradient_map_raw(&norm.image))?;
    let edges = canny_edges(&norm.image, canny.sigma, canny.low_frac, canny.high_frac)?;
    let b = masked(&distance_feature_map(&edges, distance_mode))?;
    ChannelStack::new(r, g, b)
}
