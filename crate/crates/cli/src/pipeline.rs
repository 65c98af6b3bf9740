//! Per-row feature extraction: normalize, build the pseudo-color stack,
//! and compute whichever descriptor families the run asked for, all backed
//! by the content-addressed cache.

use std::path::Path;

use rayon::prelude::*;

use renoscan_core::cnn::{random_archive, Network, NetworkSpec, WeightArchive};
use renoscan_core::descriptors::{geometric_features, hog, GeometricFeatures};
use renoscan_core::error::Error;
use renoscan_core::featuremaps::{build_stack, ChannelStack};
use renoscan_core::features::FeatureSet;
use renoscan_core::imaging::{io, GrayImage};
use renoscan_core::normalize::{fit_ellipse, normalize_kidney, NormalizedImage};
use renoscan_core::seeding::derive_seed;

use crate::cache::{content_key, persist_atomic, write_atomic, StageCache};
use crate::config::PipelineConfig;
use crate::manifest::ManifestRow;
use crate::CliError;

/// CNN feature length at `tap`, from shape inference alone; no weights
/// are materialized.
pub fn tap_length(tap: &str) -> Result<usize, CliError> {
    let spec = NetworkSpec::caffe_alex();
    let (idx, _) = spec
        .layer(tap)
        .ok_or_else(|| CliError::Validation(format!("unknown CNN tap {tap:?}")))?;
    let shapes = spec
        .infer_shapes()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(shapes[idx].len())
}

/// HOG feature length for an n0 x n0 raster at the given cell size.
pub fn hog_length(n0: u32, cell: u32) -> Result<usize, CliError> {
    if cell == 0 {
        return Err(CliError::Validation("HOG cell size must be positive".into()));
    }
    let cells = (n0 / cell) as usize;
    if cells < 2 {
        return Err(CliError::Validation(format!(
            "HOG cell size {cell} leaves a {cells}x{cells} grid; need at least 2x2"
        )));
    }
    Ok(cells * cells * 36)
}

/// Byte-exact quantization to the 8-bit domain, matching what the image
/// codec stores; keeps warm-cache reloads identical to fresh computes.
fn quantize(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        img.get(x, y).round().clamp(0.0, 255.0)
    })
    .expect("dimensions preserved")
}

#[derive(Debug, Clone)]
pub struct RowFeatures {
    pub row: ManifestRow,
    pub cnn: Vec<f64>,
    pub hog: Vec<f64>,
    pub geome: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RowFailure {
    pub sample_id: String,
    pub message: String,
    /// True when the failure was a non-finite numeric value, which maps
    /// to its own exit code.
    pub numeric: bool,
}

#[derive(Debug)]
pub struct PipelineRun {
    /// Successful rows in manifest order.
    pub rows: Vec<RowFeatures>,
    pub failures: Vec<RowFailure>,
    pub cache_summaries: Vec<String>,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    need: FeatureSet,
    network: Option<Network>,
    weights_id: String,
    norm_cache: StageCache,
    stack_cache: StageCache,
    geome_cache: StageCache,
    hog_cache: StageCache,
    cnn_cache: StageCache,
}

impl Pipeline {
    /// Prepares caches and, when CNN features are requested, the network.
    /// Weights come from the configured directory or, by default, from
    /// the master seed.
    pub fn new(cfg: &PipelineConfig, cache_root: &Path, need: FeatureSet) -> Result<Self, CliError> {
        let (network, weights_id) = if need.cnn {
            let spec = NetworkSpec::caffe_alex();
            if spec.input.0 != cfg.n0 as usize || spec.input.1 != cfg.n0 as usize {
                return Err(CliError::Validation(format!(
                    "CNN features need n0 = {}, got {}",
                    spec.input.0, cfg.n0
                )));
            }
            if spec.layer(&cfg.cnn_tap).is_none() {
                return Err(CliError::Validation(format!(
                    "unknown CNN tap {:?}",
                    cfg.cnn_tap
                )));
            }
            let (archive, weights_id) = match &cfg.cnn_weights {
                Some(dir) => {
                    let archive = WeightArchive::load(dir)
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    let manifest = std::fs::read(dir.join("manifest.json"))
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    let payload = std::fs::read(dir.join("weights.bin"))
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    let id = content_key("weights", &[&manifest, &payload]);
                    (archive, id)
                }
                None => {
                    let seed = derive_seed(cfg.seed, "cnn-weights", &[]);
                    let archive = random_archive(&spec, seed)
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    (archive, format!("random-{seed:016x}"))
                }
            };
            let network =
                Network::new(spec, archive).map_err(|e| CliError::Validation(e.to_string()))?;
            (Some(network), weights_id)
        } else {
            (None, String::new())
        };

        Ok(Self {
            cfg: cfg.clone(),
            need,
            network,
            weights_id,
            norm_cache: StageCache::new(cache_root, "normalize"),
            stack_cache: StageCache::new(cache_root, "stack"),
            geome_cache: StageCache::new(cache_root, "geome"),
            hog_cache: StageCache::new(cache_root, "hog"),
            cnn_cache: StageCache::new(cache_root, "cnn"),
        })
    }

    /// (cnn, hog, geome) vector lengths this run will produce; zero for
    /// families not requested.
    pub fn family_lengths(&self) -> Result<(usize, usize, usize), CliError> {
        let cnn = match &self.network {
            Some(net) => net
                .output_len(&self.cfg.cnn_tap)
                .map_err(|e| CliError::Validation(e.to_string()))?,
            None => 0,
        };
        let hog = if self.need.hog {
            hog_length(self.cfg.n0, self.cfg.effective_hog_cell())?
        } else {
            0
        };
        let geome = if self.need.geome {
            GeometricFeatures::LEN
        } else {
            0
        };
        Ok((cnn, hog, geome))
    }

    /// Runs every row through the pipeline on a bounded thread pool;
    /// 0 threads means the library default.
    pub fn run(&self, rows: &[ManifestRow], threads: usize) -> Result<PipelineRun, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
        let results: Vec<Result<RowFeatures, Error>> =
            pool.install(|| rows.par_iter().map(|row| self.row_features(row)).collect());

        let mut ok = Vec::new();
        let mut failures = Vec::new();
        for (row, result) in rows.iter().zip(results) {
            match result {
                Ok(features) => ok.push(features),
                Err(e) => failures.push(RowFailure {
                    sample_id: row.sample_id.clone(),
                    message: e.to_string(),
                    numeric: matches!(e, Error::NonFinite(_)),
                }),
            }
        }

        let mut cache_summaries = vec![self.norm_cache.summary()];
        if self.need.hog || self.need.cnn {
            cache_summaries.push(self.stack_cache.summary());
        }
        if self.need.geome {
            cache_summaries.push(self.geome_cache.summary());
        }
        if self.need.hog {
            cache_summaries.push(self.hog_cache.summary());
        }
        if self.need.cnn {
            cache_summaries.push(self.cnn_cache.summary());
        }
        Ok(PipelineRun {
            rows: ok,
            failures,
            cache_summaries,
        })
    }

    fn normalize_stage(
        &self,
        key: &str,
        img_bytes: &[u8],
        mask_bytes: &[u8],
    ) -> Result<NormalizedImage, Error> {
        let img_entry = self.norm_cache.entry(key, "image.png");
        let mask_entry = self.norm_cache.entry(key, "mask.png");
        let fit_entry = self.norm_cache.entry(key, "fit.json");
        if self
            .norm_cache
            .probe(&[&img_entry, &mask_entry, &fit_entry])
        {
            return Ok(NormalizedImage {
                image: io::load_gray(&img_entry)?,
                mask: io::load_mask(&mask_entry)?,
                source_fit: serde_json::from_slice(&std::fs::read(&fit_entry)?)?,
            });
        }
        let img = io::load_gray_bytes(img_bytes)?;
        let mask = io::load_mask_bytes(mask_bytes)?;
        let fit = fit_ellipse(&mask)?;
        let norm = normalize_kidney(&img, &mask, &fit, self.cfg.n0, self.cfg.margin)?;
        let norm = NormalizedImage {
            image: quantize(&norm.image),
            mask: norm.mask,
            source_fit: norm.source_fit,
        };
        persist_atomic(&img_entry, |tmp| io::save_gray(&norm.image, tmp))?;
        persist_atomic(&mask_entry, |tmp| io::save_mask(&norm.mask, tmp))?;
        write_atomic(&fit_entry, &serde_json::to_vec_pretty(&norm.source_fit)?)?;
        Ok(norm)
    }

    fn stack_stage(&self, key: &str, norm: &NormalizedImage) -> Result<ChannelStack, Error> {
        let entry = self.stack_cache.entry(key, "png");
        if self.stack_cache.probe(&[&entry]) {
            let (r, g, b) = io::load_rgb(&entry)?;
            return ChannelStack::new(r, g, b);
        }
        let stack = build_stack(norm, &self.cfg.canny(), self.cfg.distance_mode)?;
        let stack = ChannelStack::new(quantize(stack.r()), quantize(stack.g()), quantize(stack.b()))?;
        persist_atomic(&entry, |tmp| {
            io::save_rgb(stack.r(), stack.g(), stack.b(), tmp)
        })?;
        Ok(stack)
    }

    fn cached_vector(
        cache: &StageCache,
        key: &str,
        compute: impl FnOnce() -> Result<Vec<f64>, Error>,
    ) -> Result<Vec<f64>, Error> {
        let entry = cache.entry(key, "json");
        if cache.probe(&[&entry]) {
            return Ok(serde_json::from_slice(&std::fs::read(&entry)?)?);
        }
        let values = compute()?;
        write_atomic(&entry, &serde_json::to_vec(&values)?)?;
        Ok(values)
    }

    fn row_features(&self, row: &ManifestRow) -> Result<RowFeatures, Error> {
        let img_bytes = std::fs::read(&row.image_path)?;
        let mask_bytes = std::fs::read(&row.mask_path)?;

        let norm_key = content_key(
            "normalize",
            &[
                &self.cfg.n0.to_le_bytes(),
                &self.cfg.margin.to_le_bytes(),
                &img_bytes,
                &mask_bytes,
            ],
        );
        let norm = self.normalize_stage(&norm_key, &img_bytes, &mask_bytes)?;

        let stack = if self.need.hog || self.need.cnn {
            let mode_tag: &[u8] = match self.cfg.distance_mode {
                renoscan_core::featuremaps::DistanceMode::Euclidean => b"euclidean",
                renoscan_core::featuremaps::DistanceMode::Squared => b"squared",
            };
            let stack_key = content_key(
                "stack",
                &[
                    norm_key.as_bytes(),
                    &self.cfg.canny_sigma.to_le_bytes(),
                    &self.cfg.canny_low_frac.to_le_bytes(),
                    &self.cfg.canny_high_frac.to_le_bytes(),
                    mode_tag,
                ],
            );
            Some((stack_key.clone(), self.stack_stage(&stack_key, &norm)?))
        } else {
            None
        };

        let geome = if self.need.geome {
            let key = content_key("geome", &[norm_key.as_bytes()]);
            Self::cached_vector(&self.geome_cache, &key, || {
                Ok(geometric_features(&norm.image, &norm.mask, &norm.source_fit)?.concat())
            })?
        } else {
            Vec::new()
        };

        let hog_values = if self.need.hog {
            let (stack_key, stack) = stack.as_ref().expect("stack built for hog");
            let cell = self.cfg.effective_hog_cell();
            let key = content_key("hog", &[stack_key.as_bytes(), &cell.to_le_bytes()]);
            Self::cached_vector(&self.hog_cache, &key, || {
                Ok(hog(stack.r(), cell)?.into_values())
            })?
        } else {
            Vec::new()
        };

        let cnn = if self.need.cnn {
            let (stack_key, stack) = stack.as_ref().expect("stack built for cnn");
            let network = self.network.as_ref().expect("network built for cnn");
            let key = content_key(
                "cnn",
                &[
                    stack_key.as_bytes(),
                    self.cfg.cnn_tap.as_bytes(),
                    self.weights_id.as_bytes(),
                ],
            );
            Self::cached_vector(&self.cnn_cache, &key, || {
                Ok(network
                    .forward(stack, &self.cfg.cnn_tap)?
                    .into_iter()
                    .map(f64::from)
                    .collect())
            })?
        } else {
            Vec::new()
        };

        Ok(RowFeatures {
            row: row.clone(),
            cnn,
            hog: hog_values,
            geome,
        })
    }
}
