//! Attention-based encoder-decoder translation built on a small
//! reverse-mode autodiff engine.
//!
//! - [`tensor`]: dense tensors, the computation graph, activations
//! - [`text`]: normalization, vocabularies, encoding, corpus splitting and batching
//! - [`model`]: GRU/LSTM cells, additive attention, the seq2seq network
//! - [`train`]: masked cross-entropy, Adam, the training loop, checkpoints
//! - [`harness`]: ablation studies and their CSV reports
//! - [`cli`]: the `attnmt` command-line front end

pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod tensor;
pub mod text;
pub mod train;

pub use error::{CheckpointError, Error, Result};
pub use tensor::{ActivationKind, Graph, Real, Tensor, Var};
