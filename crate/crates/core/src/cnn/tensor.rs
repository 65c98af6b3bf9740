//! Row-major height x width x channels activation tensor.

use crate::error::{Error, Result};
use crate::featuremaps::ChannelStack;

/// Activation values in HWC order: index (y, x, c) maps to
/// `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidRaster(format!(
                "zero tensor dimension: {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidRaster(format!(
                "tensor data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor value {bad}")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::from_vec(height, width, channels, vec![0.0; height * width * channels])
    }

    /// Interleaves the three planes of a channel stack, subtracting one
    /// mean per channel.
    pub fn from_stack(stack: &ChannelStack, channel_means: [f32; 3]) -> Self {
        let w = stack.width() as usize;
        let h = stack.height() as usize;
        let mut data = Vec::with_capacity(h * w * 3);
        for y in 0..stack.height() {
            for x in 0..stack.width() {
                for (plane, mean) in [stack.r(), stack.g(), stack.b()].iter().zip(channel_means) {
                    data.push(plane.get(x, y) as f32 - mean);
                }
            }
        }
        Self {
            height: h,
            width: w,
            channels: 3,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Reads with zero padding outside the spatial extent.
    #[inline]
    pub fn get_padded(&self, y: isize, x: isize, c: usize) -> f32 {
        if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
            0.0
        } else {
            self.get(y as usize, x as usize, c)
        }
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }
}
