//! Layer computations. Every op fixes its summation order per output
//! element, so results are bitwise reproducible; the im2col convolution
//! path matches the naive definition within 1e-4 but is not bit-equal to
//! it.

use crate::cnn::tensor::Tensor;
use crate::error::{Error, Result};

/// Convolution kernel, laid out [kh, kw, in_per_group, out] with the
/// output index fastest.
#[derive(Debug, Clone)]
pub struct ConvKernel {
    kh: usize,
    kw: usize,
    in_per_group: usize,
    out_channels: usize,
    data: Vec<f32>,
}

impl ConvKernel {
    pub fn from_parts(shape: &[usize], data: &[f32]) -> Result<Self> {
        let &[kh, kw, in_per_group, out_channels] = shape else {
            return Err(Error::WeightArchive(format!(
                "convolution kernel needs 4 dimensions, got {shape:?}"
            )));
        };
        if kh * kw * in_per_group * out_channels != data.len() {
            return Err(Error::WeightArchive(format!(
                "kernel shape {shape:?} does not match {} values",
                data.len()
            )));
        }
        Ok(Self {
            kh,
            kw,
            in_per_group,
            out_channels,
            data: data.to_vec(),
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    #[inline]
    fn at(&self, i: usize, j: usize, c: usize, o: usize) -> f32 {
        self.data[((i * self.kw + j) * self.in_per_group + c) * self.out_channels + o]
    }
}

struct ConvGeometry {
    out_h: usize,
    out_w: usize,
    out_per_group: usize,
}

fn conv_geometry(
    input: &Tensor,
    kernel: &ConvKernel,
    bias: &[f32],
    stride: usize,
    pad: usize,
    groups: usize,
) -> Result<ConvGeometry> {
    if groups == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "convolution stride and groups must be positive".into(),
        ));
    }
    if !kernel.out_channels.is_multiple_of(groups) {
        return Err(Error::InvalidParameter(format!(
            "groups {groups} does not divide {} output channels",
            kernel.out_channels
        )));
    }
    if input.channels() != kernel.in_per_group * groups {
        return Err(Error::InvalidParameter(format!(
            "input has {} channels, kernel covers {} x {groups} groups",
            input.channels(),
            kernel.in_per_group
        )));
    }
    if bias.len() != kernel.out_channels {
        return Err(Error::InvalidParameter(format!(
            "bias length {} for {} output channels",
            bias.len(),
            kernel.out_channels
        )));
    }
    if input.height() + 2 * pad < kernel.kh || input.width() + 2 * pad < kernel.kw {
        return Err(Error::InvalidParameter(format!(
            "kernel {}x{} larger than padded input {}x{}",
            kernel.kh,
            kernel.kw,
            input.height(),
            input.width()
        )));
    }
    Ok(ConvGeometry {
        out_h: (input.height() + 2 * pad - kernel.kh) / stride + 1,
        out_w: (input.width() + 2 * pad - kernel.kw) / stride + 1,
        out_per_group: kernel.out_channels / groups,
    })
}

/// Reference convolution: the direct quadruple loop over the definition.
/// Normative; the fast path must agree with this within 1e-4.
pub fn conv2d_naive(
    input: &Tensor,
    kernel: &ConvKernel,
    bias: &[f32],
    stride: usize,
    pad: usize,
    groups: usize,
) -> Result<Tensor> {
    let g = conv_geometry(input, kernel, bias, stride, pad, groups)?;
    let cpg = kernel.in_per_group;
    let mut out = Tensor::zeros(g.out_h, g.out_w, kernel.out_channels)?;
    let data = out.as_mut_slice();
    let mut idx = 0;
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            for (o, &b) in bias.iter().enumerate() {
                let group = o / g.out_per_group;
                let mut acc = b;
                for i in 0..kernel.kh {
                    for j in 0..kernel.kw {
                        let y = (oy * stride + i) as isize - pad as isize;
                        let x = (ox * stride + j) as isize - pad as isize;
                        for c in 0..cpg {
                            acc += input.get_padded(y, x, group * cpg + c)
                                * kernel.at(i, j, c, o);
                        }
                    }
                }
                data[idx] = acc;
                idx += 1;
            }
        }
    }
    Ok(out)
}

/// im2col + matrix-multiply convolution. Same contract as
/// [`conv2d_naive`]; differs only in floating-point summation order.
pub fn conv2d(
    input: &Tensor,
    kernel: &ConvKernel,
    bias: &[f32],
    stride: usize,
    pad: usize,
    groups: usize,
) -> Result<Tensor> {
    let g = conv_geometry(input, kernel, bias, stride, pad, groups)?;
    let cpg = kernel.in_per_group;
    let patch = kernel.kh * kernel.kw * cpg;
    let rows = g.out_h * g.out_w;

    let mut out = Tensor::zeros(g.out_h, g.out_w, kernel.out_channels)?;
    let mut a = vec![0.0f32; rows * patch];
    let mut b = vec![0.0f32; patch * g.out_per_group];
    let mut c_mat = vec![0.0f32; rows * g.out_per_group];

    for group in 0..groups {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let row = oy * g.out_w + ox;
                let mut col = 0;
                for i in 0..kernel.kh {
                    let y = (oy * stride + i) as isize - pad as isize;
                    for j in 0..kernel.kw {
                        let x = (ox * stride + j) as isize - pad as isize;
                        for c in 0..cpg {
                            a[row * patch + col] = input.get_padded(y, x, group * cpg + c);
                            col += 1;
                        }
                    }
                }
            }
        }
        for i in 0..kernel.kh {
            for j in 0..kernel.kw {
                for c in 0..cpg {
                    let row = (i * kernel.kw + j) * cpg + c;
                    for ol in 0..g.out_per_group {
                        b[row * g.out_per_group + ol] =
                            kernel.at(i, j, c, group * g.out_per_group + ol);
                    }
                }
            }
        }
        unsafe {
            matrixmultiply::sgemm(
                rows,
                patch,
                g.out_per_group,
                1.0,
                a.as_ptr(),
                patch as isize,
                1,
                b.as_ptr(),
                g.out_per_group as isize,
                1,
                0.0,
                c_mat.as_mut_ptr(),
                g.out_per_group as isize,
                1,
            );
        }
        let data = out.as_mut_slice();
        for row in 0..rows {
            for ol in 0..g.out_per_group {
                let o = group * g.out_per_group + ol;
                data[row * kernel.out_channels + o] = c_mat[row * g.out_per_group + ol] + bias[o];
            }
        }
    }
    Ok(out)
}

pub fn relu(input: &Tensor) -> Tensor {
    let (h, w, c) = input.shape();
    let data = input.as_slice().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_vec(h, w, c, data).expect("shape preserved")
}

/// Local response normalization across channels:
/// `out = v / (k + alpha * sum of squares in a depth-wide channel window)^beta`.
pub fn lrn(input: &Tensor, depth: usize, k: f32, alpha: f32, beta: f32) -> Result<Tensor> {
    if depth == 0 {
        return Err(Error::InvalidParameter("lrn depth must be positive".into()));
    }
    let (h, w, ch) = input.shape();
    let half = depth / 2;
    let mut out = Tensor::zeros(h, w, ch)?;
    let data = out.as_mut_slice();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let lo = c.saturating_sub(half);
                let hi = (c + half).min(ch - 1);
                let mut sum = 0.0f32;
                for cc in lo..=hi {
                    let v = input.get(y, x, cc);
                    sum += v * v;
                }
                data[(y * w + x) * ch + c] = input.get(y, x, c) / (k + alpha * sum).powf(beta);
            }
        }
    }
    Ok(out)
}

pub fn max_pool(input: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "pool window and stride must be positive".into(),
        ));
    }
    let (h, w, c) = input.shape();
    if h < window || w < window {
        return Err(Error::InvalidParameter(format!(
            "pool window {window} larger than input {h}x{w}"
        )));
    }
    let out_h = (h - window) / stride + 1;
    let out_w = (w - window) / stride + 1;
    let mut out = Tensor::zeros(out_h, out_w, c)?;
    let data = out.as_mut_slice();
    for oy in 0..out_h {
        for ox in 0..out_w {
            for ch in 0..c {
                let mut best = f32::NEG_INFINITY;
                for i in 0..window {
                    for j in 0..window {
                        best = best.max(input.get(oy * stride + i, ox * stride + j, ch));
                    }
                }
                data[(oy * out_w + ox) * c + ch] = best;
            }
        }
    }
    Ok(out)
}

/// Dense layer on the flattened input: `out[o] = bias[o] + sum_i in[i] * w[i, o]`.
pub fn fully_connected(input: &[f32], weight: &[f32], bias: &[f32]) -> Result<Vec<f32>> {
    let out_n = bias.len();
    if out_n == 0 || weight.len() != input.len() * out_n {
        return Err(Error::InvalidParameter(format!(
            "fc weight length {} for {} inputs x {out_n} outputs",
            weight.len(),
            input.len()
        )));
    }
    let mut out = bias.to_vec();
    for (i, &v) in input.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let row = &weight[i * out_n..(i + 1) * out_n];
        for (o, &wv) in row.iter().enumerate() {
            out[o] += v * wv;
        }
    }
    Ok(out)
}

/// Numerically stable softmax.
pub fn softmax(input: &[f32]) -> Vec<f32> {
    let max = input.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = input.iter().map(|&v| (v - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
