use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ActivationKind;
use crate::text::NUM_SPECIAL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Gru,
    Lstm,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Gru => "GRU",
            CellKind::Lstm => "LSTM",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(Error::InvalidConfig(format!("unknown cell kind `{other}`"))),
        }
    }
}

/// Full architectural description of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub cell: CellKind,
    pub embed_dim: usize,
    /// Recurrent state width.
    pub units: usize,
    /// Hidden width of the additive attention score.
    pub attention_dim: usize,
    /// Candidate/output nonlinearity of the encoder cell (Linear or Tanh).
    pub encoder_activation: ActivationKind,
    /// Candidate/output nonlinearity of the decoder cell (Linear or Tanh).
    pub decoder_activation: ActivationKind,
    /// Nonlinearity inside the attention score (Sigmoid or Tanh).
    pub attention_inner: ActivationKind,
    /// Normalization of attention scores (Softmax or Sigmoid).
    pub attention_outer: ActivationKind,
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub max_source_len: usize,
    pub max_target_len: usize,
}

impl ModelConfig {
    /// GRU, Linear encoder, Tanh decoder, Sigmoid→Softmax attention: the
    /// best-performing combination of the ablations.
    pub fn new(
        source_vocab_size: usize,
        target_vocab_size: usize,
        max_source_len: usize,
        max_target_len: usize,
        embed_dim: usize,
        units: usize,
    ) -> Self {
        Self {
            cell: CellKind::Gru,
            embed_dim,
            units,
            attention_dim: units,
            encoder_activation: ActivationKind::Linear,
            decoder_activation: ActivationKind::Tanh,
            attention_inner: ActivationKind::Sigmoid,
            attention_outer: ActivationKind::Softmax,
            source_vocab_size,
            target_vocab_size,
            max_source_len,
            max_target_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ActivationKind::*;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.embed_dim == 0 || self.units == 0 || self.attention_dim == 0 {
            return bad("embed_dim, units and attention_dim must be positive".into());
        }
        if self.source_vocab_size <= NUM_SPECIAL || self.target_vocab_size <= NUM_SPECIAL {
            return bad(format!(
                "vocabulary sizes must be at least {} (got {} / {})",
                NUM_SPECIAL + 1,
                self.source_vocab_size,
                self.target_vocab_size
            ));
        }
        if self.max_source_len < 2 || self.max_target_len < 2 {
            return bad("sequence lengths must be at least 2".into());
        }
        for (what, kind) in [("encoder", self.encoder_activation), ("decoder", self.decoder_activation)] {
            if !matches!(kind, Linear | Tanh) {
                return bad(format!("{what} activation must be Linear or Tanh, got {kind}"));
            }
        }
        if !matches!(self.attention_inner, Sigmoid | Tanh) {
            return bad(format!("attention inner stage must be Sigmoid or Tanh, got {}", self.attention_inner));
        }
        if !matches!(self.attention_outer, Softmax | Sigmoid) {
            return bad(format!("attention outer stage must be Softmax or Sigmoid, got {}", self.attention_outer));
        }
        Ok(())
    }
}
