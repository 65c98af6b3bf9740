//! Exact Euclidean distance transform via the lower envelope of parabolas
//! (Felzenszwalb-Huttenlocher), separable over rows and columns.

use crate::featuremaps::{DistanceMode, EdgeMap};
use crate::imaging::{rescale_to_255, GrayImage};

const INF: f64 = f64::INFINITY;

/// Squared Euclidean distance from every pixel to its nearest edge pixel.
///
/// Exact: integer grid offsets keep every squared distance representable,
/// so results equal a brute-force nearest-edge scan bit for bit. An empty
/// edge set yields the all-zero map.
pub fn squared_distance_map(edges: &EdgeMap) -> GrayImage {
    let w = edges.width() as usize;
    let h = edges.height() as usize;
    if edges.is_empty() {
        return GrayImage::zeros(edges.width(), edges.height()).expect("nonzero dims");
    }

    // Sampled function: 0 on edge pixels, +inf elsewhere.
    let mut grid = vec![INF; w * h];
    for (x, y) in edges.edge_pixels() {
        grid[y as usize * w + x as usize] = 0.0;
    }

    let n = w.max(h);
    let mut f = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];

    // Columns first, then rows; the second pass sees finite values
    // everywhere because the edge set is nonempty.
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        envelope_1d(&f[..h], &mut d, &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..y * w + w]);
        envelope_1d(&f[..w], &mut d, &mut v, &mut z);
        grid[y * w..y * w + w].copy_from_slice(&d[..w]);
    }

    GrayImage::from_vec(edges.width(), edges.height(), grid).expect("distances are finite")
}

/// 1-D squared distance transform of a sampled function:
/// `d[q] = min_p (q - p)^2 + f[p]`.
///
/// Parabolas rooted at infinite samples never contribute and are skipped;
/// an all-infinite input stays all-infinite.
fn envelope_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q] == INF {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = -INF;
            z[1] = INF;
            started = true;
            continue;
        }
        // Intersection of the parabola at q with the rightmost kept one.
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // The parabola at p is dominated everywhere; drop it.
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }

    if !started {
        d[..n].fill(INF);
        return;
    }
    let mut k = 0usize;
    for (q, dq) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

/// Distance channel before masking and rescaling: Euclidean or squared
/// distance to the nearest edge, rescaled to [0, 255].
pub fn distance_feature_map(edges: &EdgeMap, mode: DistanceMode) -> GrayImage {
    let sq = squared_distance_map(edges);
    let raw = match mode {
        DistanceMode::Squared => sq,
        DistanceMode::Euclidean => GrayImage::from_fn(sq.width(), sq.height(), |x, y| {
            sq.get(x, y).sqrt()
        })
        .expect("source dimensions are valid"),
    };
    rescale_to_255(&raw)
}

/// Brute-force nearest-edge scan. Quadratic; test oracle only.
#[cfg(test)]
pub(crate) fn brute_force_squared(edges: &EdgeMap) -> GrayImage {
    if edges.is_empty() {
        return GrayImage::zeros(edges.width(), edges.height()).unwrap();
    }
    let pts: Vec<(u32, u32)> = edges.edge_pixels().collect();
    GrayImage::from_fn(edges.width(), edges.height(), |x, y| {
        pts.iter()
            .map(|&(ex, ey)| {
                let dx = f64::from(ex) - f64::from(x);
                let dy = f64::from(ey) - f64::from(y);
                dx * dx + dy * dy
            })
            .fold(INF, f64::min)
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_edge_pixel_in_5x5() {
        let edges = EdgeMap::from_points(5, 5, &[(2, 2)]).unwrap();
        let sq = squared_distance_map(&edges);
        assert_eq!(sq.get(0, 0), 8.0);
        assert_eq!(sq.get(2, 0), 4.0);
        assert_eq!(sq.get(2, 2), 0.0);
        assert_eq!(sq.get(4, 4), 8.0);
        assert_eq!(sq.get(1, 2), 1.0);
    }

    #[test]
    fn two_edges_in_a_line_of_five() {
        let edges = EdgeMap::from_points(1, 5, &[(0, 0), (0, 4)]).unwrap();
        let sq = squared_distance_map(&edges);
        let got: Vec<f64> = (0..5).map(|y| sq.get(0, y)).collect();
        assert_eq!(got, vec![0.0, 1.0, 4.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_edge_set_yields_zero_map() {
        let edges = EdgeMap::empty(9, 7).unwrap();
        let sq = squared_distance_map(&edges);
        assert!(sq.as_slice().iter().all(|&v| v == 0.0));
        let feat = distance_feature_map(&edges, DistanceMode::Euclidean);
        assert!(feat.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_brute_force_on_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..25 {
            let density = rng.gen_range(0.002..0.2);
            let edges = EdgeMap::from_fn(64, 64, |_, _| rng.gen_bool(density)).unwrap();
            let fast = squared_distance_map(&edges);
            let brute = brute_force_squared(&edges);
            assert_eq!(
                fast.as_slice(),
                brute.as_slice(),
                "mismatch on case {case} with {} edges",
                edges.len()
            );
        }
    }

    #[test]
    fn matches_brute_force_on_skinny_rasters() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &(w, h) in &[(1u32, 64u32), (64, 1), (2, 37), (37, 2), (3, 3)] {
            for _ in 0..5 {
                let edges = EdgeMap::from_fn(w, h, |_, _| rng.gen_bool(0.1)).unwrap();
                assert_eq!(
                    squared_distance_map(&edges).as_slice(),
                    brute_force_squared(&edges).as_slice()
                );
            }
        }
    }

    /// Adding edge pixels can only decrease distances.
    #[test]
    fn monotone_under_edge_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let base: Vec<(u32, u32)> = (0..20)
            .map(|_| (rng.gen_range(0..48), rng.gen_range(0..48)))
            .collect();
        let mut extended = base.clone();
        extended.extend((0..20).map(|_| {
            (
                rng.gen_range(0..48u32),
                rng.gen_range(0..48u32),
            )
        }));
        let a = squared_distance_map(&EdgeMap::from_points(48, 48, &base).unwrap());
        let b = squared_distance_map(&EdgeMap::from_points(48, 48, &extended).unwrap());
        for (va, vb) in a.as_slice().iter().zip(b.as_slice()) {
            assert!(vb <= va);
        }
    }

    #[test]
    fn euclidean_mode_takes_square_root() {
        let edges = EdgeMap::from_points(7, 1, &[(0, 0)]).unwrap();
        let feat = distance_feature_map(&edges, DistanceMode::Euclidean);
        // Distances 0..6 rescale linearly: value at x is x/6 * 255.
        for x in 0..7u32 {
            let expected = f64::from(x) / 6.0 * 255.0;
            assert!((feat.get(x, 0) - expected).abs() < 1e-9);
        }
        let sq = distance_feature_map(&edges, DistanceMode::Squared);
        for x in 0..7u32 {
            let expected = f64::from(x * x) / 36.0 * 255.0;
            assert!((sq.get(x, 0) - expected).abs() < 1e-9);
        }
    }
}
