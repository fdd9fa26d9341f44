//! Convolutional autoencoder over arrival windows: a strided Conv1D encoder
//! down to a dense bottleneck, mirrored by a transposed-convolution decoder.
//! Reconstruction MAE is the novelty score.

mod io;
mod model;
mod spec;
mod train;

pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use model::{build, Autoencoder, Gradients};
pub use spec::{Activation, AutoencoderSpec, ConvStage};
pub use train::{train, EpochLoss, TaggedWindow, TrainConfig, TrainReport, WindowLabel, MIN_TRAINING_WINDOWS};

use crate::neuralcore::NnError;

#[derive(Debug, thiserror::Error)]
pub enum AutoencoderError {
    #[error("invalid autoencoder spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("need at least {required} training windows, got {found}")]
    TooFewWindows { found: usize, required: usize },
    #[error("training input {0} is not tagged as a helicopter window")]
    NonHelicopterInput(String),
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("model stored with {found}-byte floats, this build uses {expected}")]
    WidthMismatch { found: u8, expected: u8 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, AutoencoderError>;
