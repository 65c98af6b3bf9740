//! Ultrasound kidney classification pipeline.
//!
//! End-to-end building blocks for classifying kidney ultrasound images:
//!
//! - [`imaging`] — raster types, masks, intensity rescaling, 8-bit I/O.
//! - [`normalize`] — ellipse fitting and geometric normalization.
//! - [`featuremaps`] — gradient map, Canny edges, distance transform, and
//!   the 3-channel pseudo-color stack.
//! - [`descriptors`] — HOG and geometric (shape + dark-hole) features.
//! - [`cnn`] — a small feed-forward CNN inference engine for transfer
//!   learning feature extraction.
//! - [`svm`] — L2-regularized L1-loss linear SVM trained by dual
//!   coordinate descent.
//! - [`eval`] — stratified repeated cross-validation, ROC curves, AUC.
//! - [`features`] — descriptor-family selection and column schemas.
//!
//! All operations are pure functions over immutable values; anything
//! random is seeded explicitly (see [`seeding`]).

pub mod cnn;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod featuremaps;
pub mod features;
pub mod imaging;
pub mod normalize;
pub mod seeding;
pub mod svm;

pub use error::{Error, Result};
pub use imaging::{apply_mask, rescale_to_255, BinaryMask, GrayImage};
pub use normalize::{fit_ellipse, normalize_kidney, EllipseFit, NormalizedImage};
