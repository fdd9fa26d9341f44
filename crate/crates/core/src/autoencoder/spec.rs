use serde::{Deserialize, Serialize};

use super::{AutoencoderError, Result};
use crate::trackdata::{FEATURE_COUNT, WINDOW_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// One strided convolution stage: kernel size, stride, output channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub kernel: usize,
    pub stride: usize,
    pub channels: usize,
    pub activation: Activation,
}

impl ConvStage {
    pub const fn relu(kernel: usize, stride: usize, channels: usize) -> Self {
        Self {
            kernel,
            stride,
            channels,
            activation: Activation::Relu,
        }
    }
}

/// Layer layout of the autoencoder.
///
/// The decoder runs its transposed convolutions in order; after each one the
/// sequence is cropped back to the length of the mirrored encoder stage's
/// input (the crop must be smaller than the stride), and a final pointwise
/// linear convolution maps to `features` channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderSpec {
    pub window_len: usize,
    pub features: usize,
    pub encoder: Vec<ConvStage>,
    pub latent_dim: usize,
    pub bottleneck_activation: Activation,
    pub decoder_dense_activation: Activation,
    pub decoder: Vec<ConvStage>,
    pub seed: u64,
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        let encoder = vec![ConvStage::relu(7, 2, 16), ConvStage::relu(5, 2, 32), ConvStage::relu(3, 2, 64)];
        Self {
            window_len: WINDOW_LEN,
            features: FEATURE_COUNT,
            decoder: mirror_decoder(&encoder),
            encoder,
            latent_dim: 16,
            bottleneck_activation: Activation::Linear,
            decoder_dense_activation: Activation::Relu,
            seed: 0,
        }
    }
}

/// Decoder stages mirroring `encoder`: reversed kernels and strides, each
/// stage producing the channel count that fed the mirrored encoder stage
/// (the last one keeps the first encoder width; a pointwise layer follows).
pub fn mirror_decoder(encoder: &[ConvStage]) -> Vec<ConvStage> {
    let n = encoder.len();
    (0..n)
        .rev()
        .map(|i| ConvStage {
            kernel: encoder[i].kernel,
            stride: encoder[i].stride,
            channels: if i == 0 { encoder[0].channels } else { encoder[i - 1].channels },
            activation: encoder[i].activation,
        })
        .collect()
}

/// Shapes derived from a valid spec.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Plan {
    /// Sequence length entering each encoder stage, plus the final length.
    pub encoder_lengths: Vec<usize>,
    /// `(uncropped length, cropped length)` after each decoder stage.
    pub decoder_lengths: Vec<(usize, usize)>,
}

impl AutoencoderSpec {
    pub(crate) fn plan(&self) -> Result<Plan> {
        let bad = |m: String| Err(AutoencoderError::InvalidSpec(m));
        if self.latent_dim == 0 {
            return bad("latent dim must be >= 1".into());
        }
        if self.window_len == 0 || self.features == 0 {
            return bad("input shape must be non-empty".into());
        }
        if self.encoder.is_empty() {
            return bad("encoder needs at least one stage".into());
        }
        if self.decoder.len() != self.encoder.len() {
            return bad(format!(
                "decoder has {} stages but encoder has {}; the decoder must mirror the encoder",
                self.decoder.len(),
                self.encoder.len()
            ));
        }
        for st in self.encoder.iter().chain(&self.decoder) {
            if st.kernel == 0 || st.stride == 0 || st.channels == 0 {
                return bad(format!("stage {st:?} has a zero dimension"));
            }
        }
        let mut encoder_lengths = vec![self.window_len];
        for st in &self.encoder {
            let l = *encoder_lengths.last().unwrap();
            encoder_lengths.push(l.div_ceil(st.stride));
        }
        let mut decoder_lengths = Vec::new();
        let mut l = *encoder_lengths.last().unwrap();
        for (i, st) in self.decoder.iter().enumerate() {
            let target = encoder_lengths[self.encoder.len() - 1 - i];
            let raw = l * st.stride;
            if raw < target || raw - target >= st.stride {
                return bad(format!(
                    "decoder stage {i} yields length {raw}, which cannot be trimmed to {target}; \
                     the decoder cannot restore ({}, {})",
                    self.window_len, self.features
                ));
            }
            decoder_lengths.push((raw, target));
            l = target;
        }
        Ok(Plan {
            encoder_lengths,
            decoder_lengths,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.plan().map(|_| ())
    }
}
