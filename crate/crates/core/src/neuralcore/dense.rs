use serde::{Deserialize, Serialize};

use super::{shape_err, NnError, Real, Result, Tensor3};

/// Fully connected layer over the flattened `(length, channels)` block of each
/// sample. Weights are `(in_dim, out_dim)` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<Real>,
    pub bias: Vec<Real>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub grad_input: Tensor3,
    pub grad_weights: Vec<Real>,
    pub grad_bias: Vec<Real>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NnError::InvalidLayer(format!(
                "dense dims must be >= 1, got {in_dim}x{out_dim}"
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        })
    }

    pub fn with_params(mut self, weights: Vec<Real>, bias: Vec<Real>) -> Result<Self> {
        if weights.len() != self.in_dim * self.out_dim {
            return Err(shape_err("dense weights", self.in_dim * self.out_dim, weights.len()));
        }
        if bias.len() != self.out_dim {
            return Err(shape_err("dense bias", self.out_dim, bias.len()));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("dense parameters"));
        }
        self.weights = weights;
        self.bias = bias;
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn check_input(&self, x: &Tensor3) -> Result<()> {
        let per_sample = x.length() * x.channels();
        if per_sample != self.in_dim {
            return Err(shape_err("dense input", self.in_dim, per_sample));
        }
        Ok(())
    }

    /// Output shape is `(batch, 1, out_dim)`.
    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check_input(x)?;
        let (n_in, n_out) = (self.in_dim, self.out_dim);
        let mut out = Vec::with_capacity(x.batch() * n_out);
        for xs in x.data().chunks_exact(n_in) {
            let mut acc = self.bias.clone();
            for (i, &xv) in xs.iter().enumerate() {
                for (a, &w) in acc.iter_mut().zip(&self.weights[i * n_out..(i + 1) * n_out]) {
                    *a += xv * w;
                }
            }
            out.extend(acc);
        }
        Ok(Tensor3::from_raw([x.batch(), 1, n_out], out))
    }

    pub fn backward(&self, x: &Tensor3, grad_out: &Tensor3) -> Result<DenseGrads> {
        self.check_input(x)?;
        if grad_out.batch() != x.batch() || grad_out.length() * grad_out.channels() != self.out_dim {
            return Err(shape_err(
                "dense grad_out",
                format!("({}, 1, {})", x.batch(), self.out_dim),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let (n_in, n_out) = (self.in_dim, self.out_dim);
        let mut grad_input = Vec::with_capacity(x.data().len());
        let mut grad_weights = vec![0.0; self.weights.len()];
        let mut grad_bias = vec![0.0; n_out];
        for (xs, g) in x.data().chunks_exact(n_in).zip(grad_out.data().chunks_exact(n_out)) {
            for (gb, &gv) in grad_bias.iter_mut().zip(g) {
                *gb += gv;
            }
            for (i, &xv) in xs.iter().enumerate() {
                let row = i * n_out..(i + 1) * n_out;
                let mut gx = 0.0;
                for ((gw, &w), &gv) in grad_weights[row.clone()].iter_mut().zip(&self.weights[row]).zip(g) {
                    *gw += xv * gv;
                    gx += w * gv;
                }
                grad_input.push(gx);
            }
        }
        Ok(DenseGrads {
            grad_input: Tensor3::from_raw(x.shape(), grad_input),
            grad_weights,
            grad_bias,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_passes_input_through() {
        let mut w = vec![0.0; 16];
        for i in 0..4 {
            w[i * 4 + i] = 1.0;
        }
        let d = DenseLayer::new(4, 4).unwrap().with_params(w, vec![0.0; 4]).unwrap();
        let x = Tensor3::from_vec([2, 2, 2], vec![1.0, -2.0, 3.0, 0.5, 0.0, 7.0, -1.0, 2.0]).unwrap();
        let y = d.forward(&x).unwrap();
        assert_eq!(y.shape(), [2, 1, 4]);
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn wrong_input_size() {
        let d = DenseLayer::new(3, 2).unwrap();
        assert!(d.forward(&Tensor3::zeros(1, 2, 2)).is_err());
        assert!(DenseLayer::new(0, 2).is_err());
    }
}
