//! Synthetic labeled corpus: textured ellipse phantoms on a dark canvas.
//! Normal kidneys get a moderate aspect ratio and bright speckle; abnormal
//! ones are more elongated and pocked with dark holes, so both the shape
//! terms and the hole ratios carry the label.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use renoscan_core::imaging::{io, BinaryMask, GrayImage};
use renoscan_core::seeding::rng_for;

use crate::cache::write_atomic;
use crate::CliError;

const CANVAS: u32 = 224;
/// Texture floor; every hole-ratio threshold sits below it, so a phantom
/// without holes scores ~0 on all of them.
const TEXTURE_FLOOR: f64 = 40.0;
/// Intensity under which a pixel counts as hole area while painting.
const DARK_LIMIT: f64 = 20.0;

/// Writes `count` phantoms as images/, masks/, and manifest.csv. Classes
/// and sides rotate so every (class, side) cell gets count/4 samples.
pub fn generate(out_dir: &Path, count: usize, seed: u64) -> Result<(), CliError> {
    if count < 4 {
        return Err(CliError::Validation(format!(
            "need at least 4 phantoms to cover both classes and sides, got {count}"
        )));
    }
    let images = out_dir.join("images");
    let masks = out_dir.join("masks");
    std::fs::create_dir_all(&images)?;
    std::fs::create_dir_all(&masks)?;

    let mut manifest = String::from("sample_id,subject_id,side,label,image_path,mask_path\n");
    for i in 0..count {
        let mut rng = rng_for(seed, "phantom-row", &[i as u64]);
        let cakut = i % 2 == 1;
        let side = if (i / 2) % 2 == 0 { "left" } else { "right" };
        let (img, mask) = render_phantom(&mut rng, cakut);
        let name = format!("ph{i:03}.png");
        io::save_gray(&img, images.join(&name))?;
        io::save_mask(&mask, masks.join(&name))?;
        // A subject contributes a left and a right kidney of one class.
        let subject = format!("subj{}{:03}", if cakut { "c" } else { "n" }, i / 4);
        writeln!(
            manifest,
            "ph{i:03},{subject},{side},{},images/{name},masks/{name}",
            if cakut { "cakut" } else { "normal" }
        )
        .expect("string write");
    }
    write_atomic(&out_dir.join("manifest.csv"), manifest.as_bytes())?;
    Ok(())
}

fn render_phantom(rng: &mut impl Rng, cakut: bool) -> (GrayImage, BinaryMask) {
    let b = rng.gen_range(22.0..=30.0);
    let aspect = if cakut {
        rng.gen_range(2.6..=3.2)
    } else {
        rng.gen_range(1.8..=2.2)
    };
    let a = b * aspect;
    // Off the +-pi/2 wrap so the rasterized region is unambiguous.
    let theta: f64 = rng.gen_range(-1.4..=1.4);
    let cx = CANVAS as f64 / 2.0 + rng.gen_range(-6.0..=6.0);
    let cy = CANVAS as f64 / 2.0 + rng.gen_range(-6.0..=6.0);
    let (sin_t, cos_t) = theta.sin_cos();
    let inside = |x: f64, y: f64| {
        let dx = x - cx;
        let dy = y - cy;
        let u = dx * cos_t + dy * sin_t;
        let v = -dx * sin_t + dy * cos_t;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    };

    let mask = BinaryMask::from_fn(CANVAS, CANVAS, |x, y| inside(x as f64, y as f64))
        .expect("nonzero canvas");

    let phase1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let phase2 = rng.gen_range(0.0..std::f64::consts::TAU);
    let w = CANVAS as usize;
    let mut data = vec![0.0f64; w * w];
    for y in 0..w {
        for x in 0..w {
            if !mask.inside(x as u32, y as u32) {
                continue;
            }
            let band = 45.0 * (x as f64 / 7.3 + phase1).sin() * (y as f64 / 9.1 + phase2).cos();
            data[y * w + x] = (112.0 + band + rng.gen_range(-25.0..=25.0)).max(TEXTURE_FLOOR);
        }
    }

    if cakut {
        paint_holes(rng, &mask, &mut data);
    }

    let img = GrayImage::from_vec(CANVAS, CANVAS, data).expect("buffer sized to canvas");
    (img, mask)
}

/// Paints dark circles inside the mask until their area reaches a random
/// target fraction of the interior.
fn paint_holes(rng: &mut impl Rng, mask: &BinaryMask, data: &mut [f64]) {
    let w = CANVAS as usize;
    let interior = mask.count_inside() as f64;
    let target = rng.gen_range(0.06..=0.13);
    for _ in 0..60 {
        let dark = data
            .iter()
            .zip(mask.as_slice())
            .filter(|&(&v, &inside)| inside && v < DARK_LIMIT)
            .count() as f64;
        if dark / interior >= target {
            break;
        }
        let (hx, hy) = loop {
            let x = rng.gen_range(0..CANVAS);
            let y = rng.gen_range(0..CANVAS);
            if mask.inside(x, y) {
                break (x as f64, y as f64);
            }
        };
        let radius: f64 = rng.gen_range(3.0..=9.0);
        let level: f64 = rng.gen_range(2.0..=16.0);
        let reach = radius.ceil() as i64;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let x = hx as i64 + dx;
                let y = hy as i64 + dy;
                if x < 0 || y < 0 || x >= CANVAS as i64 || y >= CANVAS as i64 {
                    continue;
                }
                let (x, y) = (x as u32, y as u32);
                if !mask.inside(x, y) {
                    continue;
                }
                if ((x as f64 - hx).powi(2) + (y as f64 - hy).powi(2)).sqrt() <= radius {
                    data[y as usize * w + x as usize] = level;
                }
            }
        }
    }
}
