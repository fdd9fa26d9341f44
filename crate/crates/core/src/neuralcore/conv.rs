//! Strided 1-D convolution and its transpose.
//!
//! Weights of both layers are stored as `(kernel, in_channels, out_channels)`,
//! flattened as `(j * c_in + ci) * c_out + co`.

use serde::{Deserialize, Serialize};

use super::{shape_err, NnError, Real, Result, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding totalling `k - 1`, the odd element on the right.
    Same,
    Valid,
}

/// Gradients of a convolution-style layer.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub grad_input: Tensor3,
    pub grad_weights: Vec<Real>,
    pub grad_bias: Vec<Real>,
}

fn check_config(k: usize, s: usize, c_in: usize, c_out: usize) -> Result<()> {
    if k == 0 || s == 0 || c_in == 0 || c_out == 0 {
        return Err(NnError::InvalidLayer(format!(
            "kernel={k} stride={s} c_in={c_in} c_out={c_out}; all must be >= 1"
        )));
    }
    Ok(())
}

fn check_params(k: usize, c_in: usize, c_out: usize, weights: &[Real], bias: &[Real]) -> Result<()> {
    if weights.len() != k * c_in * c_out {
        return Err(shape_err("conv weights", k * c_in * c_out, weights.len()));
    }
    if bias.len() != c_out {
        return Err(shape_err("conv bias", c_out, bias.len()));
    }
    if weights.iter().chain(bias).any(|v| !v.is_finite()) {
        return Err(NnError::NonFinite("conv parameters"));
    }
    Ok(())
}

fn pad_left(k: usize, padding: Padding) -> usize {
    match padding {
        Padding::Same => (k - 1) / 2,
        Padding::Valid => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1DLayer {
    pub kernel_size: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub padding: Padding,
    pub weights: Vec<Real>,
    pub bias: Vec<Real>,
}

impl Conv1DLayer {
    /// Zero-initialized layer.
    pub fn new(
        kernel_size: usize,
        stride: usize,
        in_channels: usize,
        out_channels: usize,
        padding: Padding,
    ) -> Result<Self> {
        check_config(kernel_size, stride, in_channels, out_channels)?;
        Ok(Self {
            kernel_size,
            stride,
            in_channels,
            out_channels,
            padding,
            weights: vec![0.0; kernel_size * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        })
    }

    pub fn with_params(mut self, weights: Vec<Real>, bias: Vec<Real>) -> Result<Self> {
        check_params(self.kernel_size, self.in_channels, self.out_channels, &weights, &bias)?;
        self.weights = weights;
        self.bias = bias;
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Output length for an input of `length`, or `None` if the input is too short.
    pub fn output_len(&self, length: usize) -> Option<usize> {
        match self.padding {
            Padding::Same if length >= 1 => Some(length.div_ceil(self.stride)),
            Padding::Valid if length >= self.kernel_size => {
                Some((length - self.kernel_size) / self.stride + 1)
            }
            _ => None,
        }
    }

    fn check_input(&self, x: &Tensor3) -> Result<usize> {
        if x.channels() != self.in_channels {
            return Err(shape_err("conv1d input channels", self.in_channels, x.channels()));
        }
        self.output_len(x.length())
            .ok_or_else(|| shape_err("conv1d input length", format!(">= {}", self.kernel_size), x.length()))
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        let out_len = self.check_input(x)?;
        let (k, s, cin, cout) = (self.kernel_size, self.stride, self.in_channels, self.out_channels);
        let pl = pad_left(k, self.padding);
        let len = x.length();
        let mut out = Tensor3::zeros(x.batch(), out_len, cout);
        for b in 0..x.batch() {
            for o in 0..out_len {
                let start = out.index(b, o, 0);
                let acc = &mut out.data_mut()[start..start + cout];
                acc.copy_from_slice(&self.bias);
                for j in 0..k {
                    let Some(i) = (o * s + j).checked_sub(pl).filter(|&i| i < len) else {
                        continue;
                    };
                    for ci in 0..cin {
                        let xv = x.get(b, i, ci);
                        let w = &self.weights[(j * cin + ci) * cout..(j * cin + ci + 1) * cout];
                        for (a, &wv) in acc.iter_mut().zip(w) {
                            *a += xv * wv;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn backward(&self, x: &Tensor3, grad_out: &Tensor3) -> Result<ConvGrads> {
        let out_len = self.check_input(x)?;
        if grad_out.shape() != [x.batch(), out_len, self.out_channels] {
            return Err(shape_err(
                "conv1d grad_out",
                format!("{:?}", [x.batch(), out_len, self.out_channels]),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let (k, s, cin, cout) = (self.kernel_size, self.stride, self.in_channels, self.out_channels);
        let pl = pad_left(k, self.padding);
        let len = x.length();
        let mut grad_input = Tensor3::zeros(x.batch(), len, cin);
        let mut grad_weights = vec![0.0; self.weights.len()];
        let mut grad_bias = vec![0.0; cout];
        for b in 0..x.batch() {
            for o in 0..out_len {
                let g0 = grad_out.index(b, o, 0);
                let g = &grad_out.data()[g0..g0 + cout];
                for (gb, &gv) in grad_bias.iter_mut().zip(g) {
                    *gb += gv;
                }
                for j in 0..k {
                    let Some(i) = (o * s + j).checked_sub(pl).filter(|&i| i < len) else {
                        continue;
                    };
                    for ci in 0..cin {
                        let row = (j * cin + ci) * cout;
                        let w = &self.weights[row..row + cout];
                        let xv = x.get(b, i, ci);
                        let mut gx = 0.0;
                        for ((gw, &wv), &gv) in grad_weights[row..row + cout].iter_mut().zip(w).zip(g) {
                            *gw += xv * gv;
                            gx += wv * gv;
                        }
                        let gi = grad_input.index(b, i, ci);
                        grad_input.data_mut()[gi] += gx;
                    }
                }
            }
        }
        Ok(ConvGrads {
            grad_input,
            grad_weights,
            grad_bias,
        })
    }
}

/// Transposed 1-D convolution: scatters every input step over `kernel_size`
/// output steps spaced by `stride`. With `Same` padding the output length is
/// `input_len * stride`; with `Valid` it is `(input_len - 1) * stride + kernel_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvTranspose1DLayer {
    pub kernel_size: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub padding: Padding,
    pub weights: Vec<Real>,
    pub bias: Vec<Real>,
}

impl ConvTranspose1DLayer {
    pub fn new(
        kernel_size: usize,
        stride: usize,
        in_channels: usize,
        out_channels: usize,
        padding: Padding,
    ) -> Result<Self> {
        check_config(kernel_size, stride, in_channels, out_channels)?;
        Ok(Self {
            kernel_size,
            stride,
            in_channels,
            out_channels,
            padding,
            weights: vec![0.0; kernel_size * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        })
    }

    pub fn with_params(mut self, weights: Vec<Real>, bias: Vec<Real>) -> Result<Self> {
        check_params(self.kernel_size, self.in_channels, self.out_channels, &weights, &bias)?;
        self.weights = weights;
        self.bias = bias;
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn output_len(&self, length: usize) -> Option<usize> {
        if length == 0 {
            return None;
        }
        Some(match self.padding {
            Padding::Same => length * self.stride,
            Padding::Valid => (length - 1) * self.stride + self.kernel_size,
        })
    }

    fn check_input(&self, x: &Tensor3) -> Result<usize> {
        if x.channels() != self.in_channels {
            return Err(shape_err("conv_transpose1d input channels", self.in_channels, x.channels()));
        }
        self.output_len(x.length())
            .ok_or_else(|| shape_err("conv_transpose1d input length", ">= 1", 0))
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        let out_len = self.check_input(x)?;
        let (k, s, cin, cout) = (self.kernel_size, self.stride, self.in_channels, self.out_channels);
        let pl = pad_left(k, self.padding);
        let mut out = Tensor3::zeros(x.batch(), out_len, cout);
        for b in 0..x.batch() {
            for i in 0..out_len {
                let start = out.index(b, i, 0);
                out.data_mut()[start..start + cout].copy_from_slice(&self.bias);
            }
            for o in 0..x.length() {
                for j in 0..k {
                    let Some(i) = (o * s + j).checked_sub(pl).filter(|&i| i < out_len) else {
                        continue;
                    };
                    let start = out.index(b, i, 0);
                    for ci in 0..cin {
                        let xv = x.get(b, o, ci);
                        let w = &self.weights[(j * cin + ci) * cout..(j * cin + ci + 1) * cout];
                        let acc = &mut out.data_mut()[start..start + cout];
                        for (a, &wv) in acc.iter_mut().zip(w) {
                            *a += xv * wv;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn backward(&self, x: &Tensor3, grad_out: &Tensor3) -> Result<ConvGrads> {
        let out_len = self.check_input(x)?;
        if grad_out.shape() != [x.batch(), out_len, self.out_channels] {
            return Err(shape_err(
                "conv_transpose1d grad_out",
                format!("{:?}", [x.batch(), out_len, self.out_channels]),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let (k, s, cin, cout) = (self.kernel_size, self.stride, self.in_channels, self.out_channels);
        let pl = pad_left(k, self.padding);
        let mut grad_input = Tensor3::zeros(x.batch(), x.length(), cin);
        let mut grad_weights = vec![0.0; self.weights.len()];
        let mut grad_bias = vec![0.0; cout];
        for b in 0..x.batch() {
            for i in 0..out_len {
                let g0 = grad_out.index(b, i, 0);
                for (gb, &gv) in grad_bias.iter_mut().zip(&grad_out.data()[g0..g0 + cout]) {
                    *gb += gv;
                }
            }
            for o in 0..x.length() {
                for j in 0..k {
                    let Some(i) = (o * s + j).checked_sub(pl).filter(|&i| i < out_len) else {
                        continue;
                    };
                    let g0 = grad_out.index(b, i, 0);
                    let g = &grad_out.data()[g0..g0 + cout];
                    for ci in 0..cin {
                        let row = (j * cin + ci) * cout;
                        let w = &self.weights[row..row + cout];
                        let xv = x.get(b, o, ci);
                        let mut gx = 0.0;
                        for ((gw, &wv), &gv) in grad_weights[row..row + cout].iter_mut().zip(w).zip(g) {
                            *gw += xv * gv;
                            gx += wv * gv;
                        }
                        let gi = grad_input.index(b, o, ci);
                        grad_input.data_mut()[gi] += gx;
                    }
                }
            }
        }
        Ok(ConvGrads {
            grad_input,
            grad_weights,
            grad_bias,
        })
    }
}
