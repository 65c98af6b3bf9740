//! Error type shared by all pipeline stages.

use thiserror::Error;

/// Errors produced by the kidney-image pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Two rasters that must share dimensions do not.
    #[error("dimension mismatch: {context}: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        context: &'static str,
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    /// A raster was constructed with inconsistent geometry or non-finite data.
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    /// Mask region is empty or collinear; no ellipse can be fitted.
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// CNN layer shapes do not compose, or weights do not match the spec.
    #[error("network error at layer `{layer}`: {message}")]
    Network { layer: String, message: String },

    /// Weight archive could not be read or validated.
    #[error("weight archive: {0}")]
    WeightArchive(String),

    /// Training data is unusable (single class, non-finite features, ...).
    #[error("training data: {0}")]
    TrainingData(String),

    /// Feature vector length does not match the model.
    #[error("feature length {got} does not match model dimension {expected}")]
    FeatureLength { expected: usize, got: usize },

    /// Cross-validation request cannot be satisfied by the dataset.
    #[error("cross-validation: {0}")]
    CrossValidation(String),

    /// A dataset filter produced no samples.
    #[error("empty selection: {0}")]
    EmptySelection(String),

    /// Non-finite value encountered in a numeric computation.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
