use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::{Activation, AutoencoderSpec};
use super::{AutoencoderError, Result};
use crate::neuralcore::{
    mae, mae_grad, relu_backward, relu_forward, shape_err, Conv1DLayer, ConvTranspose1DLayer, DenseLayer, NnError,
    Padding, Real, Tensor3,
};
use crate::trackdata::{FeatureWindow, NormStats, FEATURE_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Conv(Conv1DLayer),
    ConvT(ConvTranspose1DLayer),
    Dense(DenseLayer),
    Relu,
    Reshape { length: usize, channels: usize },
    Crop { from: usize, to: usize },
}

impl Layer {
    fn forward(&self, x: &Tensor3) -> std::result::Result<Tensor3, NnError> {
        match self {
            Layer::Conv(l) => l.forward(x),
            Layer::ConvT(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::Relu => Ok(relu_forward(x)),
            Layer::Reshape { length, channels } => x.clone().reshape(*length, *channels),
            Layer::Crop { from, to } => {
                if x.length() != *from {
                    return Err(shape_err("crop input length", from, x.length()));
                }
                x.crop_length(*to)
            }
        }
    }

    fn params(&self) -> Option<(&[Real], &[Real])> {
        match self {
            Layer::Conv(l) => Some((&l.weights, &l.bias)),
            Layer::ConvT(l) => Some((&l.weights, &l.bias)),
            Layer::Dense(l) => Some((&l.weights, &l.bias)),
            _ => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut Vec<Real>, &mut Vec<Real>)> {
        match self {
            Layer::Conv(l) => Some((&mut l.weights, &mut l.bias)),
            Layer::ConvT(l) => Some((&mut l.weights, &mut l.bias)),
            Layer::Dense(l) => Some((&mut l.weights, &mut l.bias)),
            _ => None,
        }
    }

    fn fan_in(&self) -> usize {
        match self {
            Layer::Conv(l) => l.kernel_size * l.in_channels,
            Layer::ConvT(l) => (l.kernel_size * l.in_channels / l.stride).max(l.in_channels),
            Layer::Dense(l) => l.in_dim,
            _ => 0,
        }
    }
}

/// Gradient buffers aligned with [`Autoencoder::param_slices`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<Real>>);

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: Real) {
        self.0.iter_mut().flatten().for_each(|v| *v *= k);
    }

    pub fn as_slices(&self) -> Vec<&[Real]> {
        self.0.iter().map(|v| v.as_slice()).collect()
    }
}

/// Encoder/decoder weights together with the spec and the normalization that
/// produced the training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub spec: AutoencoderSpec,
    pub norm_stats: NormStats,
    pub(crate) layers: Vec<Layer>,
    /// `layers[..encoder_end]` map the input to the latent vector.
    pub(crate) encoder_end: usize,
}

fn push_activation(layers: &mut Vec<Layer>, act: Activation) {
    if act == Activation::Relu {
        layers.push(Layer::Relu);
    }
}

/// Builds a randomly initialized model (uniform, fan-in scaled, zero bias)
/// and dry-runs a forward pass to check every shape.
pub fn build(spec: &AutoencoderSpec) -> Result<Autoencoder> {
    let plan = spec.plan()?;
    let mut layers = Vec::new();
    let mut channels = spec.features;
    for st in &spec.encoder {
        layers.push(Layer::Conv(Conv1DLayer::new(
            st.kernel,
            st.stride,
            channels,
            st.channels,
            Padding::Same,
        )?));
        push_activation(&mut layers, st.activation);
        channels = st.channels;
    }
    let bottom_len = *plan.encoder_lengths.last().unwrap();
    let flat = bottom_len * channels;
    layers.push(Layer::Reshape {
        length: 1,
        channels: flat,
    });
    layers.push(Layer::Dense(DenseLayer::new(flat, spec.latent_dim)?));
    push_activation(&mut layers, spec.bottleneck_activation);
    let encoder_end = layers.len();

    layers.push(Layer::Dense(DenseLayer::new(spec.latent_dim, flat)?));
    push_activation(&mut layers, spec.decoder_dense_activation);
    layers.push(Layer::Reshape {
        length: bottom_len,
        channels,
    });
    for (st, &(raw, target)) in spec.decoder.iter().zip(&plan.decoder_lengths) {
        layers.push(Layer::ConvT(ConvTranspose1DLayer::new(
            st.kernel,
            st.stride,
            channels,
            st.channels,
            Padding::Same,
        )?));
        if raw != target {
            layers.push(Layer::Crop { from: raw, to: target });
        }
        push_activation(&mut layers, st.activation);
        channels = st.channels;
    }
    layers.push(Layer::Conv(Conv1DLayer::new(1, 1, channels, spec.features, Padding::Same)?));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in 0..layers.len() {
        let followed_by_relu = matches!(layers.get(i + 1), Some(Layer::Relu))
            || matches!((layers.get(i + 1), layers.get(i + 2)), (Some(Layer::Crop { .. }), Some(Layer::Relu)));
        let fan_in = layers[i].fan_in();
        if let Some((w, _)) = layers[i].params_mut() {
            let gain = if followed_by_relu { 6.0 } else { 3.0 };
            let limit = (gain / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for v in w.iter_mut() {
                *v = dist.sample(&mut rng) as Real;
            }
        }
    }

    let model = Autoencoder {
        spec: spec.clone(),
        norm_stats: NormStats {
            mean: [0.0; FEATURE_COUNT],
            std: [1.0; FEATURE_COUNT],
        },
        layers,
        encoder_end,
    };
    let probe = Tensor3::zeros(1, spec.window_len, spec.features);
    let out = model.forward(&probe)?;
    if out.shape() != probe.shape() {
        return Err(AutoencoderError::InvalidSpec(format!(
            "decoder output {:?} does not restore input {:?}",
            out.shape(),
            probe.shape()
        )));
    }
    Ok(model)
}

impl Autoencoder {
    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Weight and bias buffers of every parameterized layer, in layer order.
    pub fn param_slices(&self) -> Vec<&[Real]> {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [Real]> {
        self.layers
            .iter_mut()
            .filter_map(Layer::params_mut)
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    fn run(&self, layers: &[Layer], x: &Tensor3) -> Result<Tensor3> {
        let mut cur = x.clone();
        for l in layers {
            cur = l.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Full encode-decode pass on a `(batch, window_len, features)` tensor.
    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check_input(x)?;
        self.run(&self.layers, x)
    }

    fn check_input(&self, x: &Tensor3) -> Result<()> {
        if x.length() != self.spec.window_len || x.channels() != self.spec.features {
            return Err(shape_err(
                "autoencoder input",
                format!("(_, {}, {})", self.spec.window_len, self.spec.features),
                format!("{:?}", x.shape()),
            )
            .into());
        }
        Ok(())
    }

    pub fn encode_tensor(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check_input(x)?;
        self.run(&self.layers[..self.encoder_end], x)
    }

    pub fn decode_tensor(&self, z: &Tensor3) -> Result<Tensor3> {
        self.run(&self.layers[self.encoder_end..], z)
    }

    pub fn window_tensor(&self, w: &FeatureWindow) -> Result<Tensor3> {
        let data: Vec<Real> = w.values.iter().flatten().map(|&v| v as Real).collect();
        Tensor3::from_vec([1, w.values.len(), FEATURE_COUNT], data).map_err(Into::into)
    }

    /// Bottleneck representation of one window.
    pub fn encode(&self, w: &FeatureWindow) -> Result<Vec<Real>> {
        Ok(self.encode_tensor(&self.window_tensor(w)?)?.into_data())
    }

    /// Reconstruction of one window as a `(1, window_len, features)` tensor.
    pub fn reconstruct(&self, w: &FeatureWindow) -> Result<Tensor3> {
        let z = self.encode_tensor(&self.window_tensor(w)?)?;
        self.decode_tensor(&z)
    }

    pub fn reconstruction_error(&self, w: &FeatureWindow) -> Result<Real> {
        let x = self.window_tensor(w)?;
        Ok(mae(&x, &self.forward(&x)?)?)
    }

    /// MAE of `x` against its reconstruction and the gradient of that loss
    /// with respect to every parameter buffer.
    pub fn loss_and_grad(&self, x: &Tensor3) -> Result<(Real, Gradients)> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for l in &self.layers {
            let next = l.forward(acts.last().unwrap())?;
            acts.push(next);
        }
        let out = acts.last().unwrap();
        let loss = mae(x, out)?;
        let mut grad = mae_grad(x, out)?;
        let mut bufs: Vec<Vec<Real>> = Vec::new();
        for (l, input) in self.layers.iter().zip(&acts).rev() {
            grad = match l {
                Layer::Conv(c) => {
                    let g = c.backward(input, &grad)?;
                    bufs.push(g.grad_bias);
                    bufs.push(g.grad_weights);
                    g.grad_input
                }
                Layer::ConvT(c) => {
                    let g = c.backward(input, &grad)?;
                    bufs.push(g.grad_bias);
                    bufs.push(g.grad_weights);
                    g.grad_input
                }
                Layer::Dense(d) => {
                    let g = d.backward(input, &grad)?;
                    bufs.push(g.grad_bias);
                    bufs.push(g.grad_weights);
                    g.grad_input
                }
                Layer::Relu => relu_backward(input, &grad)?,
                Layer::Reshape { .. } => grad.reshape(input.length(), input.channels())?,
                Layer::Crop { from, .. } => grad.pad_length(*from)?,
            };
        }
        bufs.reverse();
        Ok((loss, Gradients(bufs)))
    }
}
