//! Feed-forward convolutional network inference for feature extraction.
//!
//! The engine runs a layer list described by a [`NetworkSpec`] with weights
//! from a [`WeightArchive`] and returns the flattened activation at a named
//! tap layer. The default topology mirrors the classic 8-layer ImageNet
//! architecture (227x227x3 input, five convolutions, three fully-connected
//! layers); features default to the 4096-wide second fully-connected
//! activation after its ReLU.

mod forward;
mod ops;
mod spec;
mod tensor;
mod weights;

pub use forward::{Network, DEFAULT_TAP};
pub use ops::{conv2d, conv2d_naive, fully_connected, lrn, max_pool, relu, softmax, ConvKernel};
pub use spec::{Layer, NetworkSpec, Shape};
pub use tensor::Tensor;
pub use weights::{random_archive, WeightArchive};
