// `!(x > 0.0)` is used on purpose so NaN fails validation; casts to `Real`
// are no-ops only in the default double-precision build.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::unnecessary_cast)]

pub mod autoencoder;
pub mod cli;
pub mod identify;
pub mod neuralcore;
pub mod runwayscore;
pub mod synthgen;
pub mod trackdata;
pub mod validate;
