use super::attention::{attention, AttentionOutput, AttentionWeights, EncoderOutput};
use super::cell::{CellState, CellWeights};
use super::config::ModelConfig;
use super::params::{check_parameters, init_parameters, Parameters};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Real, Var};
use crate::text::{normalize_text, EncodedPair, EncodedSequence, Script, Vocabulary, END, START};

/// Encoder-decoder network with additive attention.
///
/// Holds only configuration and parameter values, so a shared reference can
/// be used for inference from many threads at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq<T: Real = f32> {
    config: ModelConfig,
    params: Parameters<T>,
}

/// Parameters of a [`Seq2Seq`] placed on a [`Graph`].
pub struct BoundModel<'g, T: Real> {
    pub config: &'g ModelConfig,
    pub graph: &'g Graph<T>,
    pub encoder_embedding: Var<'g, T>,
    pub decoder_embedding: Var<'g, T>,
    pub encoder_cell: CellWeights<'g, T>,
    pub decoder_cell: CellWeights<'g, T>,
    pub attention: AttentionWeights<'g, T>,
    pub output_w: Var<'g, T>,
    pub output_b: Var<'g, T>,
}

pub struct DecoderStep<'g, T: Real> {
    /// `(batch, target_vocab_size)` unnormalized scores.
    pub logits: Var<'g, T>,
    pub state: CellState<'g, T>,
    pub attention: AttentionOutput<'g, T>,
}

impl<T: Real> Seq2Seq<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = init_parameters(&config, seed);
        Ok(Self { config, params })
    }

    pub fn from_parameters(config: ModelConfig, params: Parameters<T>) -> Result<Self> {
        config.validate()?;
        check_parameters(&config, &params)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters<T> {
        &mut self.params
    }

    /// Same model in another precision.
    pub fn cast<U: Real>(&self) -> Seq2Seq<U> {
        Seq2Seq {
            config: self.config.clone(),
            params: self.params.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    /// Places parameters on `graph`; `tracked` makes them named, differentiable leaves.
    pub fn bind<'g>(&'g self, graph: &'g Graph<T>, tracked: bool) -> Result<BoundModel<'g, T>> {
        let get = |name: &str| -> Result<Var<'g, T>> {
            let t = self
                .params
                .get(name)
                .ok_or_else(|| Error::InvalidConfig(format!("missing parameter `{name}`")))?
                .clone();
            Ok(if tracked { graph.param(name, t) } else { graph.constant(t) })
        };
        Ok(BoundModel {
            config: &self.config,
            graph,
            encoder_embedding: get("encoder.embedding")?,
            decoder_embedding: get("decoder.embedding")?,
            encoder_cell: CellWeights::bind(graph, &self.params, "encoder.cell", self.config.cell, tracked)?,
            decoder_cell: CellWeights::bind(graph, &self.params, "decoder.cell", self.config.cell, tracked)?,
            attention: AttentionWeights {
                w1: get("attention.w1")?,
                w2: get("attention.w2")?,
                b: get("attention.b")?,
                v: get("attention.v")?,
            },
            output_w: get("output.w")?,
            output_b: get("output.b")?,
        })
    }

    /// Greedy decoding of one encoded source: start token first, argmax at
    /// each step (lowest index on ties), stop at the end token or after
    /// `max_target_len` steps. The end token is not included.
    pub fn greedy_decode(&self, source: &EncodedSequence) -> Result<Vec<usize>> {
        let graph = Graph::new();
        let model = self.bind(&graph, false)?;
        let enc = model.encode(&[source])?;
        let mut state = enc.final_state;
        let mut prev = START;
        let mut out = Vec::new();
        for _ in 0..self.config.max_target_len {
            let step = model.decoder_step(&[prev], &state, &enc)?;
            let next = step.logits.value().argmax_rows()[0];
            if next == END {
                break;
            }
            out.push(next);
            state = step.state;
            prev = next;
        }
        Ok(out)
    }

    /// Normalize, encode, greedy-decode and render a sentence.
    pub fn translate(
        &self,
        source_vocab: &Vocabulary,
        target_vocab: &Vocabulary,
        sentence: &str,
        source_script: Script,
    ) -> Result<String> {
        let normalized = normalize_text(sentence, source_script);
        if normalized.is_empty() {
            return Err(Error::EmptyInput(format!("{sentence:?} is empty after normalization")));
        }
        let encoded = source_vocab.encode_sentence(&normalized, self.config.max_source_len)?;
        let ids = self.greedy_decode(&encoded)?;
        target_vocab.decode_sequence(&ids)
    }
}

impl<'g, T: Real> BoundModel<'g, T> {
    /// Runs the encoder over every position (pads included) from a zero state.
    pub fn encode(&self, batch: &[&EncodedSequence]) -> Result<EncoderOutput<'g, T>> {
        let first = batch.first().ok_or_else(|| Error::EmptyInput("encode of an empty batch".into()))?;
        let len = first.max_len();
        if let Some(bad) = batch.iter().find(|s| s.max_len() != len) {
            return Err(Error::ShapeMismatch { op: "encode batch", left: vec![len], right: vec![bad.max_len()] });
        }
        let mut state = CellState::zeros(self.graph, self.config.cell, batch.len(), self.config.units);
        let mut outputs = Vec::with_capacity(len);
        let mut ids = Vec::with_capacity(batch.len());
        for t in 0..len {
            ids.clear();
            ids.extend(batch.iter().map(|s| s.ids[t]));
            let x = self.encoder_embedding.gather_rows(&ids)?;
            state = self.encoder_cell.step(&x, &state, self.config.encoder_activation)?;
            outputs.push(state.h());
        }
        let mask = batch.iter().map(|s| (0..len).map(|t| !s.is_pad(t)).collect()).collect();
        EncoderOutput::new(outputs, mask, state, &self.attention)
    }

    /// Attention from the current hidden state, one cell step on
    /// `[embed(prev) ; context]`, then the vocabulary projection.
    pub fn decoder_step(
        &self,
        prev_ids: &[usize],
        state: &CellState<'g, T>,
        enc: &EncoderOutput<'g, T>,
    ) -> Result<DecoderStep<'g, T>> {
        let att =
            attention(enc, &state.h(), &self.attention, self.config.attention_inner, self.config.attention_outer)?;
        let embedded = self.decoder_embedding.gather_rows(prev_ids)?;
        let x = self.graph.concat_cols(&[embedded, att.context])?;
        let state = self.decoder_cell.step(&x, state, self.config.decoder_activation)?;
        let logits = state.h().matmul(&self.output_w)?.add_bias(&self.output_b)?;
        Ok(DecoderStep { logits, state, attention: att })
    }

    /// Teacher-forced logits: the decoder input at step `t` is the gold target
    /// token `t − 1` (the start token at `t = 0`). Steps stop after the longest
    /// non-pad target in the batch.
    pub fn teacher_forced_logits(&self, batch: &[&EncodedPair]) -> Result<Vec<Var<'g, T>>> {
        let sources: Vec<&EncodedSequence> = batch.iter().map(|p| &p.source).collect();
        let enc = self.encode(&sources)?;
        let steps = batch.iter().map(|p| p.target.true_length).max().unwrap_or(0);
        let mut state = enc.final_state;
        let mut logits = Vec::with_capacity(steps);
        let mut prev: Vec<usize> = vec![START; batch.len()];
        for t in 0..steps {
            let step = self.decoder_step(&prev, &state, &enc)?;
            logits.push(step.logits);
            state = step.state;
            for (p, pair) in prev.iter_mut().zip(batch) {
                *p = pair.target.ids[t];
            }
        }
        Ok(logits)
    }
}
