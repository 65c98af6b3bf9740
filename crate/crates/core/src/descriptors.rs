//! Hand-crafted descriptors: oriented-gradient histograms and the
//! shape/hole-ratio geometric feature vector.

mod geometric;
mod hog;

pub use geometric::{geometric_features, GeometricFeatures, BLOCK_THRESHOLD_COUNT};
pub use hog::{hog, hog_cell_size, HogDescriptor, BLOCK_COPIES, ORIENTATION_BINS};
