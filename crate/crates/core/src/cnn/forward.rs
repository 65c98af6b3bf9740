//! Validated network execution with a named feature tap.

use crate::cnn::ops;
use crate::cnn::spec::{Layer, NetworkSpec, Shape};
use crate::cnn::tensor::Tensor;
use crate::cnn::weights::WeightArchive;
use crate::error::{Error, Result};
use crate::featuremaps::ChannelStack;

/// Post-ReLU output of the second fully-connected layer in the default
/// topology.
pub const DEFAULT_TAP: &str = "relu7";

enum Activation {
    Spatial(Tensor),
    Vector(Vec<f32>),
}

impl Activation {
    fn into_flat(self) -> Vec<f32> {
        match self {
            Activation::Spatial(t) => t.into_vec(),
            Activation::Vector(v) => v,
        }
    }
}

/// A spec bound to a validated weight archive. Shape inference and
/// weight/spec cross-checks happen once here, not per inference.
pub struct Network {
    spec: NetworkSpec,
    shapes: Vec<Shape>,
    archive: WeightArchive,
}

impl Network {
    pub fn new(spec: NetworkSpec, archive: WeightArchive) -> Result<Self> {
        let shapes = spec.infer_shapes()?;
        archive.validate_against(&spec)?;
        Ok(Self {
            spec,
            shapes,
            archive,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Flat length of the activation at `tap`.
    pub fn output_len(&self, tap: &str) -> Result<usize> {
        let (idx, _) = self
            .spec
            .layer(tap)
            .ok_or_else(|| Error::Network {
                layer: tap.to_string(),
                message: "tap layer not found".into(),
            })?;
        Ok(self.shapes[idx].len())
    }

    /// Runs layers up to and including `tap` and returns the flattened
    /// activation there.
    pub fn forward(&self, stack: &ChannelStack, tap: &str) -> Result<Vec<f32>> {
        let input = Tensor::from_stack(stack, [0.0; 3]);
        self.forward_tensor(input, tap)
    }

    /// Same as [`Network::forward`] for a pre-built input tensor.
    pub fn forward_tensor(&self, input: Tensor, tap: &str) -> Result<Vec<f32>> {
        if self.spec.layer(tap).is_none() {
            return Err(Error::Network {
                layer: tap.to_string(),
                message: "tap layer not found".into(),
            });
        }
        let (h, w, c) = self.spec.input;
        if input.shape() != (h, w, c) {
            return Err(Error::Network {
                layer: "input".into(),
                message: format!(
                    "input shape {:?} does not match spec input {:?}",
                    input.shape(),
                    self.spec.input
                ),
            });
        }

        let mut input = input;
        if !self.spec.channel_means.is_empty() {
            let means = &self.spec.channel_means;
            let data = input.as_mut_slice();
            for (i, v) in data.iter_mut().enumerate() {
                *v -= means[i % c];
            }
        }

        let mut act = Activation::Spatial(input);
        for layer in &self.spec.layers {
            act = self.apply(layer, act)?;
            if layer.name() == tap {
                let flat = act.into_flat();
                if let Some(bad) = flat.iter().find(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "activation {bad} at layer {tap}"
                    )));
                }
                return Ok(flat);
            }
        }
        unreachable!("tap existence checked above");
    }

    fn apply(&self, layer: &Layer, act: Activation) -> Result<Activation> {
        let named = |e: Error| match e {
            e @ Error::Network { .. } => e,
            other => Error::Network {
                layer: layer.name().to_string(),
                message: other.to_string(),
            },
        };
        match layer {
            Layer::Conv {
                name,
                stride,
                pad,
                groups,
                ..
            } => {
                let Activation::Spatial(t) = act else {
                    return Err(named(Error::InvalidParameter("needs spatial input".into())));
                };
                let (kshape, kdata) = self.archive.get(&format!("{name}.kernel")).expect("validated");
                let (_, bias) = self.archive.get(&format!("{name}.bias")).expect("validated");
                let kernel = ops::ConvKernel::from_parts(kshape, kdata).map_err(named)?;
                let out = ops::conv2d(&t, &kernel, bias, *stride, *pad, *groups).map_err(named)?;
                Ok(Activation::Spatial(out))
            }
            Layer::Relu { .. } => Ok(match act {
                Activation::Spatial(t) => Activation::Spatial(ops::relu(&t)),
                Activation::Vector(v) => {
                    Activation::Vector(v.into_iter().map(|x| x.max(0.0)).collect())
                }
            }),
            Layer::Lrn {
                depth, k, alpha, beta, ..
            } => {
                let Activation::Spatial(t) = act else {
                    return Err(named(Error::InvalidParameter("needs spatial input".into())));
                };
                Ok(Activation::Spatial(
                    ops::lrn(&t, *depth, *k, *alpha, *beta).map_err(named)?,
                ))
            }
            Layer::MaxPool { window, stride, .. } => {
                let Activation::Spatial(t) = act else {
                    return Err(named(Error::InvalidParameter("needs spatial input".into())));
                };
                Ok(Activation::Spatial(
                    ops::max_pool(&t, *window, *stride).map_err(named)?,
                ))
            }
            Layer::Fc { name, .. } => {
                let flat = act.into_flat();
                let (_, weight) = self.archive.get(&format!("{name}.weight")).expect("validated");
                let (_, bias) = self.archive.get(&format!("{name}.bias")).expect("validated");
                Ok(Activation::Vector(
                    ops::fully_connected(&flat, weight, bias).map_err(named)?,
                ))
            }
            Layer::Softmax { .. } => {
                let Activation::Vector(v) = act else {
                    return Err(named(Error::InvalidParameter("needs vector input".into())));
                };
                Ok(Activation::Vector(ops::softmax(&v)))
            }
        }
    }
}
