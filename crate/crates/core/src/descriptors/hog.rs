//! Histogram-of-oriented-gradients descriptor, Dalal-Triggs variant:
//! 9 unsigned orientation bins, 2x2-cell blocks, L2-hysteresis
//! normalization, returned per cell with its four block-normalized copies
//! stacked.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Unsigned orientation bins over [0, 180) degrees.
pub const ORIENTATION_BINS: usize = 9;

/// Each cell belongs to four 2x2 blocks; one normalized copy per block.
pub const BLOCK_COPIES: usize = 4;

/// Clipping level applied between the two L2 normalization passes.
const CLIP: f64 = 0.2;

/// Default cell size rule: a tenth of the image side, floored.
pub fn hog_cell_size(n0: u32) -> u32 {
    n0 / 10
}

#[derive(Debug, Clone, PartialEq)]
pub struct HogDescriptor {
    cells_x: usize,
    cells_y: usize,
    bins: usize,
    values: Vec<f64>,
}

impl HogDescriptor {
    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Values per cell: one bin set per block copy.
    pub fn bins_per_cell(&self) -> usize {
        self.bins * BLOCK_COPIES
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The stacked descriptor of one cell.
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let per = self.bins_per_cell();
        let start = (cy * self.cells_x + cx) * per;
        &self.values[start..start + per]
    }
}

/// Per-cell orientation histograms before any block normalization.
///
/// Each pixel votes its gradient magnitude, split linearly between the two
/// orientation bins bracketing its angle and bilinearly among the four
/// cells whose centers surround it. Trailing pixels beyond the cell grid
/// are dropped.
pub(crate) fn cell_histograms(
    img: &GrayImage,
    cell_size: u32,
) -> Result<(usize, usize, Vec<f64>)> {
    if cell_size == 0 {
        return Err(Error::InvalidParameter("cell size must be positive".into()));
    }
    let cells_x = (img.width() / cell_size) as usize;
    let cells_y = (img.height() / cell_size) as usize;
    if cells_x < 2 || cells_y < 2 {
        return Err(Error::InvalidParameter(format!(
            "cell size {cell_size} leaves a {cells_x}x{cells_y} cell grid; need at least 2x2"
        )));
    }

    let cs = f64::from(cell_size);
    let mut hist = vec![0.0f64; cells_x * cells_y * ORIENTATION_BINS];
    for y in 0..(cells_y as u32 * cell_size) {
        for x in 0..(cells_x as u32 * cell_size) {
            let xi = i64::from(x);
            let yi = i64::from(y);
            let gx = (img.get_clamped(xi + 1, yi) - img.get_clamped(xi - 1, yi)) / 2.0;
            let gy = (img.get_clamped(xi, yi + 1) - img.get_clamped(xi, yi - 1)) / 2.0;
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }

            // Unsigned orientation in [0, 180), measured in bin units.
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += PI;
            }
            let mut t = angle * ORIENTATION_BINS as f64 / PI;
            if t >= ORIENTATION_BINS as f64 {
                t -= ORIENTATION_BINS as f64;
            }
            let lo = t.floor() as usize;
            let lo_frac = 1.0 - (t - lo as f64);
            let hi = (lo + 1) % ORIENTATION_BINS;

            // Cell-center coordinates of this pixel.
            let cxf = (f64::from(x) + 0.5) / cs - 0.5;
            let cyf = (f64::from(y) + 0.5) / cs - 0.5;
            let cx0 = cxf.floor();
            let cy0 = cyf.floor();
            let wx1 = cxf - cx0;
            let wy1 = cyf - cy0;
            for (cx, wx) in [(cx0, 1.0 - wx1), (cx0 + 1.0, wx1)] {
                if cx < 0.0 || cx >= cells_x as f64 {
                    continue;
                }
                for (cy, wy) in [(cy0, 1.0 - wy1), (cy0 + 1.0, wy1)] {
                    if cy < 0.0 || cy >= cells_y as f64 {
                        continue;
                    }
                    let base = (cy as usize * cells_x + cx as usize) * ORIENTATION_BINS;
                    let vote = mag * wx * wy;
                    hist[base + lo] += vote * lo_frac;
                    hist[base + hi] += vote * (1.0 - lo_frac);
                }
            }
        }
    }
    Ok((cells_x, cells_y, hist))
}

/// Computes the descriptor.
///
/// Blocks are 2x2 cells at stride 1. Each block vector is L2-normalized,
/// clipped at 0.2, and renormalized; an all-zero block stays zero. The
/// result stores, per cell, its bin set from each of the four blocks
/// containing it (border cells reuse the nearest block). Length is always
/// `cells_x * cells_y * bins_per_cell`.
pub fn hog(img: &GrayImage, cell_size: u32) -> Result<HogDescriptor> {
    let (cells_x, cells_y, hist) = cell_histograms(img, cell_size)?;
    let blocks_x = cells_x - 1;
    let blocks_y = cells_y - 1;
    let bins = ORIENTATION_BINS;

    // blocks[by][bx] is the normalized 4*bins vector, cells row-major.
    let mut blocks = vec![0.0f64; blocks_x * blocks_y * 4 * bins];
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut v = [0.0f64; 4 * ORIENTATION_BINS];
            for (slot, (dy, dx)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                let cell = (by + dy) * cells_x + (bx + dx);
                v[slot * bins..(slot + 1) * bins]
                    .copy_from_slice(&hist[cell * bins..(cell + 1) * bins]);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                for a in &mut v {
                    *a = (*a / norm).min(CLIP);
                }
                let norm2 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                for a in &mut v {
                    *a /= norm2;
                }
            }
            let out = (by * blocks_x + bx) * 4 * bins;
            blocks[out..out + 4 * bins].copy_from_slice(&v);
        }
    }

    let mut values = Vec::with_capacity(cells_x * cells_y * BLOCK_COPIES * bins);
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            for (oy, ox) in [(-1i64, -1i64), (-1, 0), (0, -1), (0, 0)] {
                let bx = (cx as i64 + ox).clamp(0, blocks_x as i64 - 1) as usize;
                let by = (cy as i64 + oy).clamp(0, blocks_y as i64 - 1) as usize;
                let slot = (cy - by) * 2 + (cx - bx);
                let start = (by * blocks_x + bx) * 4 * bins + slot * bins;
                values.extend_from_slice(&blocks[start..start + bins]);
            }
        }
    }
    assert_eq!(values.len(), cells_x * cells_y * BLOCK_COPIES * bins);

    Ok(HogDescriptor {
        cells_x,
        cells_y,
        bins,
        values,
    })
}
