//! Small deterministic neural-network numerics.
//!
//! Everything here is written for one fixed graph (the track autoencoder), so
//! layers expose explicit `forward`/`backward` pairs instead of a tape. Tensors
//! are `(batch, length, channels)` and stored row-major.

mod activation;
mod adam;
mod conv;
mod dense;
mod loss;
mod tensor;

pub use activation::{relu_backward, relu_forward};
pub use adam::{AdamConfig, AdamState};
pub use conv::{Conv1DLayer, ConvGrads, ConvTranspose1DLayer, Padding};
pub use dense::{DenseGrads, DenseLayer};
pub use loss::{mae, mae_grad};
pub use tensor::Tensor3;

/// Arithmetic width used by tensors and weights.
#[cfg(not(feature = "single-precision"))]
pub type Real = f64;
/// Arithmetic width used by tensors and weights.
#[cfg(feature = "single-precision")]
pub type Real = f32;

/// Bytes per stored `Real`, recorded in model files.
pub const REAL_WIDTH: u8 = std::mem::size_of::<Real>() as u8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid layer configuration: {0}")]
    InvalidLayer(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn shape_err(context: &'static str, expected: impl ToString, found: impl ToString) -> NnError {
    NnError::ShapeMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
