//! Effective run configuration: defaults, JSON config file, flag overrides,
//! and the content hash stamped into every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use renoscan_core::featuremaps::{CannyConfig, DistanceMode};
use renoscan_core::svm::Scaling;

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every tunable of the pipeline. Serialized form doubles as the config
/// file format; the hash of the serialized form identifies a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Side length of the normalized square raster.
    pub n0: u32,
    /// Fraction of n0 the major axis is scaled to.
    pub margin: f64,
    pub canny_sigma: f64,
    pub canny_low_frac: f64,
    pub canny_high_frac: f64,
    pub distance_mode: DistanceMode,
    /// HOG cell size in pixels; None means n0 / 10.
    pub hog_cell: Option<u32>,
    /// Layer whose activation becomes the CNN feature vector.
    pub cnn_tap: String,
    /// Directory holding manifest.json + weights.bin; None means weights
    /// drawn from the master seed.
    pub cnn_weights: Option<PathBuf>,
    pub svm_c: f64,
    pub svm_eps: f64,
    pub svm_max_iter: usize,
    pub scaling: Scaling,
    pub cv_k: usize,
    pub cv_repeats: usize,
    /// Master seed; all stage randomness derives from it.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n0: 227,
            margin: 0.9,
            canny_sigma: 1.4,
            canny_low_frac: 0.1,
            canny_high_frac: 0.2,
            distance_mode: DistanceMode::Euclidean,
            hog_cell: None,
            cnn_tap: "relu7".into(),
            cnn_weights: None,
            svm_c: 1.0,
            svm_eps: 0.1,
            svm_max_iter: 1000,
            scaling: Scaling::MinMax,
            cv_k: 10,
            cv_repeats: 100,
            seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn effective_hog_cell(&self) -> u32 {
        self.hog_cell
            .unwrap_or_else(|| renoscan_core::descriptors::hog_cell_size(self.n0))
    }

    pub fn canny(&self) -> CannyConfig {
        CannyConfig {
            sigma: self.canny_sigma,
            low_frac: self.canny_low_frac,
            high_frac: self.canny_high_frac,
        }
    }

    /// Hex digest of the serialized config; stamped into every output so
    /// artifacts from different settings never look interchangeable.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n0 < 32 {
            return Err(CliError::Validation(format!(
                "n0 {} is too small for feature extraction",
                self.n0
            )));
        }
        if !(self.margin > 0.0 && self.margin <= 1.0) {
            return Err(CliError::Validation(format!(
                "margin {} must be in (0, 1]",
                self.margin
            )));
        }
        if self.effective_hog_cell() == 0 {
            return Err(CliError::Validation("HOG cell size must be positive".into()));
        }
        if self.cv_k < 2 {
            return Err(CliError::Validation(format!(
                "cv_k {} must be at least 2",
                self.cv_k
            )));
        }
        if self.cv_repeats == 0 {
            return Err(CliError::Validation("cv_repeats must be positive".into()));
        }
        Ok(())
    }
}

/// Flag-level overrides; every config field has one. `None` means the
/// flag was not given and the file/default value stands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Normalized raster side length
    #[arg(long, visible_alias = "size", global = true)]
    pub n0: Option<u32>,
    /// Major-axis fraction of n0 after scaling
    #[arg(long, global = true)]
    pub margin: Option<f64>,
    /// Gaussian sigma for Canny smoothing
    #[arg(long, global = true)]
    pub canny_sigma: Option<f64>,
    /// Low hysteresis threshold as a fraction of max gradient
    #[arg(long, global = true)]
    pub canny_low_frac: Option<f64>,
    /// High hysteresis threshold as a fraction of max gradient
    #[arg(long, global = true)]
    pub canny_high_frac: Option<f64>,
    /// Distance channel: euclidean or squared
    #[arg(long, global = true)]
    pub distance_mode: Option<String>,
    /// Store squared distances in the distance channel
    #[arg(long, global = true)]
    pub dt_squared: bool,
    /// HOG cell size in pixels (default n0 / 10)
    #[arg(long, global = true)]
    pub hog_cell: Option<u32>,
    /// CNN layer to tap for features
    #[arg(long, global = true)]
    pub cnn_tap: Option<String>,
    /// Directory with manifest.json + weights.bin
    #[arg(long, global = true)]
    pub cnn_weights: Option<PathBuf>,
    /// SVM penalty C
    #[arg(long = "c", visible_alias = "svm-c", global = true)]
    pub svm_c: Option<f64>,
    /// SVM convergence tolerance
    #[arg(long, visible_alias = "eps", global = true)]
    pub svm_eps: Option<f64>,
    /// SVM epoch cap
    #[arg(long, global = true)]
    pub svm_max_iter: Option<usize>,
    /// Feature scaling: minmax or none
    #[arg(long, visible_alias = "scale", global = true)]
    pub scaling: Option<String>,
    /// Cross-validation fold count
    #[arg(long = "k", visible_alias = "cv-k", global = true)]
    pub cv_k: Option<usize>,
    /// Cross-validation repeat count
    #[arg(long = "repeats", visible_alias = "cv-repeats", global = true)]
    pub cv_repeats: Option<usize>,
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn apply(&self, mut cfg: PipelineConfig) -> Result<PipelineConfig, CliError> {
        if let Some(v) = self.n0 {
            cfg.n0 = v;
        }
        if let Some(v) = self.margin {
            cfg.margin = v;
        }
        if let Some(v) = self.canny_sigma {
            cfg.canny_sigma = v;
        }
        if let Some(v) = self.canny_low_frac {
            cfg.canny_low_frac = v;
        }
        if let Some(v) = self.canny_high_frac {
            cfg.canny_high_frac = v;
        }
        if let Some(v) = &self.distance_mode {
            cfg.distance_mode = match v.to_ascii_lowercase().as_str() {
                "euclidean" => DistanceMode::Euclidean,
                "squared" => DistanceMode::Squared,
                other => {
                    return Err(CliError::Validation(format!(
                        "distance mode must be euclidean or squared, got {other}"
                    )))
                }
            };
        }
        if self.dt_squared {
            cfg.distance_mode = DistanceMode::Squared;
        }
        if let Some(v) = self.hog_cell {
            cfg.hog_cell = Some(v);
        }
        if let Some(v) = &self.cnn_tap {
            cfg.cnn_tap = v.clone();
        }
        if let Some(v) = &self.cnn_weights {
            cfg.cnn_weights = Some(v.clone());
        }
        if let Some(v) = self.svm_c {
            cfg.svm_c = v;
        }
        if let Some(v) = self.svm_eps {
            cfg.svm_eps = v;
        }
        if let Some(v) = self.svm_max_iter {
            cfg.svm_max_iter = v;
        }
        if let Some(v) = &self.scaling {
            cfg.scaling = match v.to_ascii_lowercase().as_str() {
                "minmax" | "min-max" => Scaling::MinMax,
                "none" => Scaling::None,
                other => {
                    return Err(CliError::Validation(format!(
                        "scaling must be minmax or none, got {other}"
                    )))
                }
            };
        }
        if let Some(v) = self.cv_k {
            cfg.cv_k = v;
        }
        if let Some(v) = self.cv_repeats {
            cfg.cv_repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

/// Final config for a run: defaults, then file, then flags.
pub fn resolve(config_file: Option<&Path>, overrides: &ConfigOverrides) -> Result<PipelineConfig, CliError> {
    let base = match config_file {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    let cfg = overrides.apply(base)?;
    cfg.validate()?;
    Ok(cfg)
}
