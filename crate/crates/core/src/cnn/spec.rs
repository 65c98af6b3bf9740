//! Network topology description and static shape inference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation shape between layers. Fully-connected outputs are vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shape {
    /// height, width, channels
    Spatial(usize, usize, usize),
    /// flat length
    Vector(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Spatial(h, w, c) => h * w * c,
            Shape::Vector(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Conv {
        name: String,
        kernel: [usize; 2],
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        pad: usize,
        groups: usize,
    },
    Relu {
        name: String,
    },
    Lrn {
        name: String,
        depth: usize,
        k: f32,
        alpha: f32,
        beta: f32,
    },
    MaxPool {
        name: String,
        window: usize,
        stride: usize,
    },
    Fc {
        name: String,
        in_features: usize,
        out_features: usize,
    },
    Softmax {
        name: String,
    },
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Conv { name, .. }
            | Layer::Relu { name }
            | Layer::Lrn { name, .. }
            | Layer::MaxPool { name, .. }
            | Layer::Fc { name, .. }
            | Layer::Softmax { name } => name,
        }
    }

    /// Output shape for a given input shape, or an error naming this layer.
    pub fn infer(&self, input: Shape) -> Result<Shape> {
        let fail = |message: String| Error::Network {
            layer: self.name().to_string(),
            message,
        };
        match *self {
            Layer::Conv {
                kernel: [kh, kw],
                in_channels,
                out_channels,
                stride,
                pad,
                groups,
                ..
            } => {
                let Shape::Spatial(h, w, c) = input else {
                    return Err(fail("convolution needs a spatial input".into()));
                };
                if c != in_channels {
                    return Err(fail(format!("expects {in_channels} channels, got {c}")));
                }
                if groups == 0 || in_channels % groups != 0 || out_channels % groups != 0 {
                    return Err(fail(format!(
                        "groups {groups} must divide in {in_channels} and out {out_channels}"
                    )));
                }
                if stride == 0 || kh == 0 || kw == 0 {
                    return Err(fail("kernel and stride must be positive".into()));
                }
                if h + 2 * pad < kh || w + 2 * pad < kw {
                    return Err(fail(format!(
                        "kernel {kh}x{kw} larger than padded input {h}x{w}+{pad}"
                    )));
                }
                Ok(Shape::Spatial(
                    (h + 2 * pad - kh) / stride + 1,
                    (w + 2 * pad - kw) / stride + 1,
                    out_channels,
                ))
            }
            Layer::Relu { .. } => Ok(input),
            Layer::Lrn { depth, .. } => {
                if depth == 0 {
                    return Err(fail("lrn depth must be positive".into()));
                }
                match input {
                    Shape::Spatial(..) => Ok(input),
                    Shape::Vector(_) => Err(fail("lrn needs a spatial input".into())),
                }
            }
            Layer::MaxPool { window, stride, .. } => {
                let Shape::Spatial(h, w, c) = input else {
                    return Err(fail("max-pool needs a spatial input".into()));
                };
                if window == 0 || stride == 0 {
                    return Err(fail("window and stride must be positive".into()));
                }
                if h < window || w < window {
                    return Err(fail(format!("window {window} larger than input {h}x{w}")));
                }
                Ok(Shape::Spatial(
                    (h - window) / stride + 1,
                    (w - window) / stride + 1,
                    c,
                ))
            }
            Layer::Fc {
                in_features,
                out_features,
                ..
            } => {
                if input.len() != in_features {
                    return Err(fail(format!(
                        "expects {in_features} inputs, got {}",
                        input.len()
                    )));
                }
                Ok(Shape::Vector(out_features))
            }
            Layer::Softmax { .. } => match input {
                Shape::Vector(n) => Ok(Shape::Vector(n)),
                Shape::Spatial(..) => Err(fail("softmax needs a vector input".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Expected input: height, width, channels.
    pub input: (usize, usize, usize),
    /// Means subtracted per input channel before the first layer.
    #[serde(default)]
    pub channel_means: Vec<f32>,
    pub layers: Vec<Layer>,
}

impl NetworkSpec {
    /// Shapes after every layer, starting from the declared input. Layer
    /// names must be unique.
    pub fn infer_shapes(&self) -> Result<Vec<Shape>> {
        let (h, w, c) = self.input;
        if self.channel_means.len() != c && !self.channel_means.is_empty() {
            return Err(Error::Network {
                layer: "input".into(),
                message: format!(
                    "{} channel means for {c} channels",
                    self.channel_means.len()
                ),
            });
        }
        let mut names = std::collections::HashSet::new();
        for layer in &self.layers {
            if !names.insert(layer.name()) {
                return Err(Error::Network {
                    layer: layer.name().to_string(),
                    message: "duplicate layer name".into(),
                });
            }
        }
        let mut shape = Shape::Spatial(h, w, c);
        let mut shapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = layer.infer(shape)?;
            shapes.push(shape);
        }
        Ok(shapes)
    }

    pub fn layer(&self, name: &str) -> Option<(usize, &Layer)> {
        self.layers
            .iter()
            .enumerate()
            .find(|(_, l)| l.name() == name)
    }

    /// The classic 227x227x3 ImageNet topology: five convolutions with
    /// response normalization and pooling, then 4096/4096/1000
    /// fully-connected layers.
    pub fn caffe_alex() -> Self {
        let conv = |name: &str, k: usize, ic, oc, stride, pad, groups| Layer::Conv {
            name: name.into(),
            kernel: [k, k],
            in_channels: ic,
            out_channels: oc,
            stride,
            pad,
            groups,
        };
        let relu = |name: &str| Layer::Relu { name: name.into() };
        let lrn = |name: &str| Layer::Lrn {
            name: name.into(),
            depth: 5,
            k: 2.0,
            alpha: 1e-4,
            beta: 0.75,
        };
        let pool = |name: &str| Layer::MaxPool {
            name: name.into(),
            window: 3,
            stride: 2,
        };
        let fc = |name: &str, i, o| Layer::Fc {
            name: name.into(),
            in_features: i,
            out_features: o,
        };
        NetworkSpec {
            input: (227, 227, 3),
            channel_means: vec![0.0, 0.0, 0.0],
            layers: vec![
                conv("conv1", 11, 3, 96, 4, 0, 1),
                relu("relu1"),
                lrn("norm1"),
                pool("pool1"),
                conv("conv2", 5, 96, 256, 1, 2, 2),
                relu("relu2"),
                lrn("norm2"),
                pool("pool2"),
                conv("conv3", 3, 256, 384, 1, 1, 1),
                relu("relu3"),
                conv("conv4", 3, 384, 384, 1, 1, 2),
                relu("relu4"),
                conv("conv5", 3, 384, 256, 1, 1, 2),
                relu("relu5"),
                pool("pool5"),
                fc("fc6", 6 * 6 * 256, 4096),
                relu("relu6"),
                fc("fc7", 4096, 4096),
                relu("relu7"),
                fc("fc8", 4096, 1000),
                Layer::Softmax { name: "prob".into() },
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_topology_shapes() {
        let spec = NetworkSpec::caffe_alex();
        let shapes = spec.infer_shapes().unwrap();
        let at = |name: &str| {
            let (i, _) = spec.layer(name).unwrap();
            shapes[i]
        };
        assert_eq!(at("conv1"), Shape::Spatial(55, 55, 96));
        assert_eq!(at("pool1"), Shape::Spatial(27, 27, 96));
        assert_eq!(at("conv2"), Shape::Spatial(27, 27, 256));
        assert_eq!(at("pool2"), Shape::Spatial(13, 13, 256));
        assert_eq!(at("conv3"), Shape::Spatial(13, 13, 384));
        assert_eq!(at("conv4"), Shape::Spatial(13, 13, 384));
        assert_eq!(at("conv5"), Shape::Spatial(13, 13, 256));
        assert_eq!(at("pool5"), Shape::Spatial(6, 6, 256));
        assert_eq!(at("fc6"), Shape::Vector(4096));
        assert_eq!(at("fc7"), Shape::Vector(4096));
        assert_eq!(at("relu7"), Shape::Vector(4096));
        assert_eq!(at("fc8"), Shape::Vector(1000));
        assert_eq!(at("prob"), Shape::Vector(1000));
    }

    #[test]
    fn conv_output_size_formula() {
        let layer = Layer::Conv {
            name: "c".into(),
            kernel: [11, 11],
            in_channels: 3,
            out_channels: 96,
            stride: 4,
            pad: 0,
            groups: 1,
        };
        assert_eq!(
            layer.infer(Shape::Spatial(227, 227, 3)).unwrap(),
            Shape::Spatial(55, 55, 96)
        );
    }

    #[test]
    fn mismatched_channels_name_the_layer() {
        let layer = Layer::Conv {
            name: "conv9".into(),
            kernel: [3, 3],
            in_channels: 8,
            out_channels: 16,
            stride: 1,
            pad: 1,
            groups: 1,
        };
        let err = layer.infer(Shape::Spatial(10, 10, 4)).unwrap_err();
        assert!(err.to_string().contains("conv9"));
    }

    #[test]
    fn group_divisibility_is_enforced() {
        let layer = Layer::Conv {
            name: "c".into(),
            kernel: [3, 3],
            in_channels: 8,
            out_channels: 9,
            stride: 1,
            pad: 1,
            groups: 2,
        };
        assert!(layer.infer(Shape::Spatial(10, 10, 8)).is_err());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut spec = NetworkSpec::caffe_alex();
        let extra = Layer::Relu { name: "relu1".into() };
        spec.layers.push(extra);
        assert!(spec.infer_shapes().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = NetworkSpec::caffe_alex();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: NetworkSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
