use std::collections::BTreeMap;
use std::time::Instant;

use super::adam::{clip_grad_norm, AdamConfig, OptimizerState};
use super::loss::{count_target_tokens, sequence_loss};
use super::metrics::TrainLog;
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::tensor::{Graph, Real, Tensor};
use crate::text::{batch_iterator, EncodedPair, EncodedSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub batch_size: usize,
    /// Seeds the per-epoch batch shuffle.
    pub seed: u64,
    /// Joint gradient L2 norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { batch_size: 64, seed: 0, clip_norm: None }
    }
}

/// Loss, token count and parameter gradients for one batch.
pub struct BatchResult<T: Real> {
    pub loss: T,
    pub tokens: usize,
    pub grads: BTreeMap<String, Tensor<T>>,
}

/// Teacher-forced forward and backward pass over one batch.
pub fn batch_gradients<T: Real>(model: &Seq2Seq<T>, batch: &[&EncodedPair]) -> Result<BatchResult<T>> {
    let graph = Graph::new();
    let bound = model.bind(&graph, true)?;
    let logits = bound.teacher_forced_logits(batch)?;
    let targets: Vec<&EncodedSequence> = batch.iter().map(|p| &p.target).collect();
    let loss = sequence_loss(&logits, &targets)?;
    let value = loss.item().expect("scalar loss");
    let grads = graph.backward(loss)?.into_named();
    Ok(BatchResult { loss: value, tokens: count_target_tokens(&targets), grads })
}

/// Teacher-forced loss without gradients.
pub fn batch_loss<T: Real>(model: &Seq2Seq<T>, batch: &[&EncodedPair]) -> Result<(T, usize)> {
    let graph = Graph::new();
    let bound = model.bind(&graph, false)?;
    let logits = bound.teacher_forced_logits(batch)?;
    let targets: Vec<&EncodedSequence> = batch.iter().map(|p| &p.target).collect();
    let loss = sequence_loss(&logits, &targets)?;
    Ok((loss.item().expect("scalar loss"), count_target_tokens(&targets)))
}

/// Token-weighted mean teacher-forced loss over `pairs`; parameters untouched.
pub fn evaluate<T: Real>(model: &Seq2Seq<T>, pairs: &[EncodedPair], batch_size: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("evaluation set is empty".into()));
    }
    let refs: Vec<&EncodedPair> = pairs.iter().collect();
    let mut total = 0.0;
    let mut tokens = 0;
    for batch in refs.chunks(batch_size.max(1)) {
        let (loss, n) = batch_loss(model, batch)?;
        total += loss.as_f64() * n as f64;
        tokens += n;
    }
    Ok(total / tokens as f64)
}

/// A model with its optimizer state and loss history.
#[derive(Debug, Clone)]
pub struct Trainer<T: Real = f32> {
    pub model: Seq2Seq<T>,
    pub optimizer: OptimizerState<T>,
    pub log: TrainLog,
    pub options: TrainOptions,
}

impl<T: Real> Trainer<T> {
    pub fn new(model: Seq2Seq<T>, adam: AdamConfig, options: TrainOptions) -> Self {
        Self { model, optimizer: OptimizerState::new(adam), log: TrainLog::new(), options }
    }

    pub fn epochs_completed(&self) -> u64 {
        self.log.last_epoch()
    }

    /// One pass over `pairs` in the shuffled order for the next epoch.
    /// Returns the token-weighted mean loss and appends it to the log.
    pub fn train_epoch(&mut self, pairs: &[EncodedPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("training set is empty".into()));
        }
        let started = Instant::now();
        let epoch = self.epochs_completed() + 1;
        let mut total = 0.0;
        let mut tokens = 0;
        for batch in batch_iterator(pairs, self.options.batch_size, self.options.seed, epoch) {
            let BatchResult { loss, tokens: n, mut grads } = batch_gradients(&self.model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("loss became {loss} in epoch {epoch}")));
            }
            if let Some(max_norm) = self.options.clip_norm {
                clip_grad_norm(&mut grads, max_norm);
            }
            self.optimizer.adam_step(self.model.params_mut(), &grads)?;
            total += loss.as_f64() * n as f64;
            tokens += n;
        }
        let mean = total / tokens as f64;
        self.log.push(mean, started.elapsed().as_secs_f64())?;
        Ok(mean)
    }

    /// Trains until `epochs` epochs are completed in total.
    pub fn train_until(&mut self, pairs: &[EncodedPair], epochs: u64) -> Result<()> {
        while self.epochs_completed() < epochs {
            self.train_epoch(pairs)?;
        }
        Ok(())
    }
}
