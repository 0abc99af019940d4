use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ReferenceValues, Report, ResultRow};
use super::stats::{split_halves, summarize, Summary};
use super::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::{CellKind, ModelConfig, Seq2Seq};
use crate::tensor::ActivationKind;
use crate::text::{encode_corpus, required_len, EncodedPair, ParallelCorpus, ScriptPair, Vocabulary, NUM_SPECIAL};
use crate::train::{AdamConfig, TrainOptions, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    ActivationGrid,
    AttentionGrid,
    Cells,
    EpochStudy,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::ActivationGrid, Study::AttentionGrid, Study::Cells, Study::EpochStudy];

    pub fn name(self) -> &'static str {
        match self {
            Study::ActivationGrid => "activation-grid",
            Study::AttentionGrid => "attention-grid",
            Study::Cells => "cells",
            Study::EpochStudy => "epoch-study",
        }
    }

    /// Epoch counts used by the original protocol for each study.
    pub fn default_epochs(self) -> u64 {
        match self {
            Study::ActivationGrid | Study::AttentionGrid => 30,
            Study::Cells => 50,
            Study::EpochStudy => 100,
        }
    }

    pub fn sweep(self) -> Vec<SweepEntry> {
        use ActivationKind::*;
        match self {
            Study::ActivationGrid => [(Linear, Linear), (Linear, Tanh), (Tanh, Linear), (Tanh, Tanh)]
                .into_iter()
                .map(|(e, d)| SweepEntry {
                    label: format!("{e}-{d}"),
                    overrides: ConfigOverride {
                        encoder_activation: Some(e),
                        decoder_activation: Some(d),
                        ..Default::default()
                    },
                })
                .collect(),
            Study::AttentionGrid => [(Sigmoid, Softmax), (Sigmoid, Sigmoid), (Tanh, Softmax), (Tanh, Sigmoid)]
                .into_iter()
                .map(|(i, o)| SweepEntry {
                    label: format!("{i}-{o}"),
                    overrides: ConfigOverride {
                        attention_inner: Some(i),
                        attention_outer: Some(o),
                        ..Default::default()
                    },
                })
                .collect(),
            Study::Cells => [CellKind::Gru, CellKind::Lstm]
                .into_iter()
                .map(|cell| SweepEntry {
                    label: cell.to_string(),
                    overrides: ConfigOverride {
                        cell: Some(cell),
                        encoder_activation: Some(Linear),
                        decoder_activation: Some(Tanh),
                        attention_inner: Some(Sigmoid),
                        attention_outer: Some(Softmax),
                    },
                })
                .collect(),
            Study::EpochStudy => vec![SweepEntry {
                label: "GRU".into(),
                overrides: ConfigOverride {
                    cell: Some(CellKind::Gru),
                    encoder_activation: Some(Linear),
                    decoder_activation: Some(Tanh),
                    attention_inner: Some(Sigmoid),
                    attention_outer: Some(Softmax),
                },
            }],
        }
    }

    pub fn reference_values(self) -> Vec<ReferenceValues> {
        let r = |label: &str, values: &[&str]| ReferenceValues {
            label: label.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        };
        match self {
            Study::ActivationGrid => vec![
                r("Linear-Linear", &["0.805", "0.787"]),
                r("Linear-Tanh", &["0.740", "0.770"]),
                r("Tanh-Linear", &["0.783", "0.781"]),
                r("Tanh-Tanh", &["0.799", "0.790"]),
            ],
            // only the ranking is published for the attention grid
            Study::AttentionGrid => vec![r("best", &["Sigmoid-Softmax"])],
            Study::Cells => vec![r("GRU", &["0.508"]), r("LSTM", &["0.602"])],
            Study::EpochStudy => vec![r("first-half", &["0.506", "0.680"]), r("second-half", &["0.107", "0.003"])],
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown study `{s}`")))
    }
}

/// Architecture choices that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub cell: CellKind,
    pub embed_dim: usize,
    pub units: usize,
    pub attention_dim: usize,
    pub encoder_activation: ActivationKind,
    pub decoder_activation: ActivationKind,
    pub attention_inner: ActivationKind,
    pub attention_outer: ActivationKind,
}

impl ModelSettings {
    /// Units 64, embedding 32, GRU, Linear/Tanh, Sigmoid→Softmax.
    pub fn desk() -> Self {
        Self::with_dims(32, 64)
    }

    pub fn with_dims(embed_dim: usize, units: usize) -> Self {
        Self {
            cell: CellKind::Gru,
            embed_dim,
            units,
            attention_dim: units,
            encoder_activation: ActivationKind::Linear,
            decoder_activation: ActivationKind::Tanh,
            attention_inner: ActivationKind::Sigmoid,
            attention_outer: ActivationKind::Softmax,
        }
    }

    pub fn to_config(&self, data: &PreparedData) -> ModelConfig {
        ModelConfig {
            cell: self.cell,
            embed_dim: self.embed_dim,
            units: self.units,
            attention_dim: self.attention_dim,
            encoder_activation: self.encoder_activation,
            decoder_activation: self.decoder_activation,
            attention_inner: self.attention_inner,
            attention_outer: self.attention_outer,
            source_vocab_size: data.source_vocab.len(),
            target_vocab_size: data.target_vocab.len(),
            max_source_len: data.max_source_len,
            max_target_len: data.max_target_len,
        }
    }

    /// Checks everything about the settings that does not depend on data.
    pub fn validate(&self) -> Result<()> {
        let mut config = ModelConfig::new(NUM_SPECIAL + 1, NUM_SPECIAL + 1, 2, 2, self.embed_dim, self.units);
        config.cell = self.cell;
        config.attention_dim = self.attention_dim;
        config.encoder_activation = self.encoder_activation;
        config.decoder_activation = self.decoder_activation;
        config.attention_inner = self.attention_inner;
        config.attention_outer = self.attention_outer;
        config.validate()
    }

    pub fn apply(&self, o: &ConfigOverride) -> Self {
        Self {
            cell: o.cell.unwrap_or(self.cell),
            encoder_activation: o.encoder_activation.unwrap_or(self.encoder_activation),
            decoder_activation: o.decoder_activation.unwrap_or(self.decoder_activation),
            attention_inner: o.attention_inner.unwrap_or(self.attention_inner),
            attention_outer: o.attention_outer.unwrap_or(self.attention_outer),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_activation: Option<ActivationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder_activation: Option<ActivationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention_inner: Option<ActivationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention_outer: Option<ActivationKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub overrides: ConfigOverride,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusSource {
    File { path: PathBuf, scripts: ScriptPair },
    Synthetic(SyntheticSpec),
}

/// Encoded corpus plus the vocabularies and lengths derived from it.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub source_vocab: Vocabulary,
    pub target_vocab: Vocabulary,
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub pairs: Vec<EncodedPair>,
}

impl PreparedData {
    /// Vocabularies and lengths from the whole corpus.
    pub fn from_corpus(corpus: &ParallelCorpus) -> Result<Self> {
        let (source_vocab, _) = Vocabulary::build(&corpus.sources())?;
        let (target_vocab, _) = Vocabulary::build(&corpus.targets())?;
        let max_source_len = required_len(&corpus.sources()).max(2);
        let max_target_len = required_len(&corpus.targets()).max(2);
        let (pairs, _) = encode_corpus(corpus, &source_vocab, &target_vocab, max_source_len, max_target_len)?;
        Ok(Self { source_vocab, target_vocab, max_source_len, max_target_len, pairs })
    }
}

impl CorpusSource {
    pub fn load(&self) -> Result<ParallelCorpus> {
        match self {
            CorpusSource::File { path, scripts } => Ok(ParallelCorpus::read_tsv(path, *scripts)?.corpus),
            CorpusSource::Synthetic(spec) => generate_synthetic_corpus(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub study: Study,
    pub base_config: ModelSettings,
    pub corpus: CorpusSource,
    pub epochs: u64,
    pub seed: u64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub clip_norm: Option<f64>,
    pub sweep: Vec<SweepEntry>,
}

impl ExperimentSpec {
    /// Spec with the study's own sweep and default optimizer settings.
    pub fn new(
        study: Study,
        base_config: ModelSettings,
        corpus: CorpusSource,
        epochs: u64,
        seed: u64,
        batch_size: usize,
    ) -> Self {
        Self {
            study,
            base_config,
            corpus,
            epochs,
            seed,
            batch_size,
            adam: AdamConfig::default(),
            clip_norm: None,
            sweep: study.sweep(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("experiment sweep is empty".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("experiment needs at least one epoch".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.adam.learning_rate >= 0.0 && self.adam.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("invalid learning rate {}", self.adam.learning_rate)));
        }
        for entry in &self.sweep {
            self.base_config.apply(&entry.overrides).validate().map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("sweep entry {}: {m}", entry.label)),
                other => other,
            })?;
        }
        Ok(())
    }
}

/// A sweep entry's outcome: its row, or the error that stopped it.
pub type RowOutcome = std::result::Result<ResultRow, (String, String)>;

fn train_row(spec: &ExperimentSpec, data: &PreparedData, entry: &SweepEntry) -> Result<ResultRow> {
    let config = spec.base_config.apply(&entry.overrides).to_config(data);
    let model = Seq2Seq::<f32>::new(config, spec.seed)?;
    let mut trainer = Trainer::new(
        model,
        spec.adam,
        TrainOptions { batch_size: spec.batch_size, seed: spec.seed, clip_norm: spec.clip_norm },
    );
    trainer.train_until(&data.pairs, spec.epochs)?;
    ResultRow::new(entry.label.clone(), trainer.log.losses())
}

/// Trains every sweep entry (in parallel) from the same seed and returns the
/// outcomes ordered by label. Failed entries do not stop the others.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<RowOutcome>> {
    spec.validate()?;
    let data = PreparedData::from_corpus(&spec.corpus.load()?)?;
    let mut outcomes: Vec<RowOutcome> = spec
        .sweep
        .par_iter()
        .map(|entry| train_row(spec, &data, entry).map_err(|e| (entry.label.clone(), e.to_string())))
        .collect();
    outcomes.sort_by(|a, b| {
        let label = |o: &RowOutcome| match o {
            Ok(r) => r.label.clone(),
            Err((l, _)) => l.clone(),
        };
        label(a).cmp(&label(b))
    });
    Ok(outcomes)
}

fn grid_report(spec: &ExperimentSpec) -> Result<Report> {
    let outcomes = run_sweep(spec)?;
    Ok(Report::from_outcomes(spec.study, spec.epochs, outcomes))
}

pub fn run_activation_grid(spec: &ExperimentSpec) -> Result<Report> {
    grid_report(spec)
}

pub fn run_attention_grid(spec: &ExperimentSpec) -> Result<Report> {
    grid_report(spec)
}

pub fn run_cell_comparison(spec: &ExperimentSpec) -> Result<Report> {
    grid_report(spec)
}

/// First-half and second-half statistics of one long run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStudy {
    pub first_half: Summary,
    pub second_half: Summary,
    pub losses: Vec<f64>,
}

impl EpochStudy {
    pub fn from_losses(losses: Vec<f64>) -> Result<Self> {
        let (first_half, second_half) = split_halves(&losses)?;
        Ok(Self { first_half, second_half, losses })
    }

    pub fn report(&self, epochs: u64) -> Result<Report> {
        let half = self.losses.len() / 2;
        let rows = vec![
            ResultRow::new("first-half".into(), self.losses[..half].to_vec())?,
            ResultRow::new("second-half".into(), self.losses[half..].to_vec())?,
        ];
        let mut report = Report::from_outcomes(Study::EpochStudy, epochs / 2, rows.into_iter().map(Ok).collect());
        report.total_epochs = Some(epochs);
        Ok(report)
    }
}

pub fn run_epoch_study(spec: &ExperimentSpec) -> Result<EpochStudy> {
    if spec.epochs < 2 || !spec.epochs.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "epoch study needs an even number of at least 2 epochs, got {}",
            spec.epochs
        )));
    }
    let entry = spec.sweep.first().ok_or_else(|| Error::InvalidConfig("experiment sweep is empty".into()))?;
    spec.validate()?;
    let data = PreparedData::from_corpus(&spec.corpus.load()?)?;
    let row = train_row(spec, &data, entry)?;
    EpochStudy::from_losses(row.per_epoch_losses)
}

/// Runs whichever study `spec` names and returns its report.
pub fn run_study(spec: &ExperimentSpec) -> Result<Report> {
    match spec.study {
        Study::ActivationGrid => run_activation_grid(spec),
        Study::AttentionGrid => run_attention_grid(spec),
        Study::Cells => run_cell_comparison(spec),
        Study::EpochStudy => run_epoch_study(spec)?.report(spec.epochs),
    }
}

/// Mean and standard deviation recomputed from a row's losses.
pub fn row_summary(row: &ResultRow) -> Result<Summary> {
    summarize(&row.per_epoch_losses)
}
