//! The encoder-decoder network: embeddings, GRU/LSTM cells, additive
//! attention and the vocabulary projection.

mod attention;
mod cell;
mod config;
mod params;
mod seq2seq;

pub use attention::{attention, AttentionOutput, AttentionWeights, EncoderOutput};
pub use cell::{gru_cell_step, lstm_cell_step, CellState, CellWeights, Gate, GruWeights, LstmWeights};
pub use config::{CellKind, ModelConfig};
pub use params::{check_parameters, init_parameters, parameter_shapes, Parameters};
pub use seq2seq::{BoundModel, DecoderStep, Seq2Seq};
