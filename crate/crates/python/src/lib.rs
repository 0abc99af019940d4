//! Python bindings: text normalization, vocabularies, synthetic corpora,
//! model training and translation, checkpoints and ablation studies.

use std::fs;
use std::path::PathBuf;

use attnmt::harness::{
    generate_synthetic_corpus, run_study as run_harness_study, summarize as summarize_values, CorpusSource,
    ExperimentSpec, ModelSettings, PreparedData, Study, SyntheticKind, SyntheticSpec,
};
use attnmt::model::{CellKind, Seq2Seq};
use attnmt::text::{normalize_text as normalize, ParallelCorpus, Script, ScriptPair, Vocabulary as CoreVocabulary};
use attnmt::train::{
    evaluate, load_checkpoint, save_checkpoint, AdamConfig, Checkpoint, TrainLog, TrainOptions, Trainer,
};
use attnmt::{ActivationKind, Tensor};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (text, script = "english"))]
fn normalize_text(text: &str, script: &str) -> PyResult<String> {
    Ok(normalize(text, parse::<Script>(script)?))
}

/// Applies `linear`, `tanh`, `sigmoid` or row-wise `softmax` to a flat list.
#[pyfunction]
fn activate(kind: &str, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let kind: ActivationKind = parse(kind)?;
    let t = Tensor::new([1, values.len()], values).map_err(value_err)?;
    Ok(kind.apply(&t).data().to_vec())
}

/// Mean and population standard deviation.
#[pyfunction]
fn summarize(values: Vec<f64>) -> PyResult<(f64, f64)> {
    let s = summarize_values(&values).map_err(value_err)?;
    Ok((s.mean, s.std_dev))
}

#[pyfunction]
#[pyo3(signature = (kind = "mapped-bilingual", n_pairs = 64, vocab_size = 30, max_len = 6, seed = 0))]
fn synthetic_corpus(
    kind: &str,
    n_pairs: usize,
    vocab_size: usize,
    max_len: usize,
    seed: u64,
) -> PyResult<Vec<(String, String)>> {
    let spec = SyntheticSpec { kind: parse(kind)?, n_pairs, vocab_size, max_len, seed };
    Ok(generate_synthetic_corpus(&spec).map_err(value_err)?.pairs().to_vec())
}

/// Runs one ablation study on a synthetic corpus and returns the report CSV.
#[pyfunction]
#[pyo3(signature = (study, epochs = None, seed = 0, corpus = "mapped-bilingual", n_pairs = 64, vocab_size = 30, max_len = 6))]
fn run_study(
    study: &str,
    epochs: Option<u64>,
    seed: u64,
    corpus: &str,
    n_pairs: usize,
    vocab_size: usize,
    max_len: usize,
) -> PyResult<String> {
    let study: Study = parse(study)?;
    let source = CorpusSource::Synthetic(SyntheticSpec {
        kind: parse::<SyntheticKind>(corpus)?,
        n_pairs,
        vocab_size,
        max_len,
        seed,
    });
    let spec =
        ExperimentSpec::new(study, ModelSettings::desk(), source, epochs.unwrap_or(study.default_epochs()), seed, 16);
    Ok(run_harness_study(&spec).map_err(value_err)?.to_csv())
}

#[pyclass(frozen)]
struct Vocabulary(CoreVocabulary);

#[pymethods]
impl Vocabulary {
    /// Builds from normalized sentences: ids by descending frequency, then
    /// first occurrence.
    #[staticmethod]
    fn build(sentences: Vec<String>) -> PyResult<Self> {
        Ok(Self(CoreVocabulary::build(&sentences).map_err(value_err)?.0))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self(CoreVocabulary::parse_file_string(text).map_err(value_err)?))
    }

    fn to_file_string(&self) -> String {
        self.0.to_file_string()
    }

    fn encode(&self, sentence: &str, max_len: usize) -> PyResult<Vec<usize>> {
        Ok(self.0.encode_sentence(sentence, max_len).map_err(value_err)?.ids)
    }

    fn decode(&self, ids: Vec<usize>) -> PyResult<String> {
        self.0.decode_sequence(&ids).map_err(value_err)
    }

    fn id(&self, word: &str) -> Option<usize> {
        self.0.id(word)
    }

    fn word(&self, id: usize) -> Option<String> {
        self.0.word(id).map(str::to_owned)
    }

    fn words(&self) -> Vec<String> {
        self.0.words().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// A trainable translator bundled with its vocabularies.
#[pyclass]
struct Model {
    trainer: Trainer<f32>,
    data: PreparedData,
    scripts: ScriptPair,
}

const CHECKPOINT: &str = "latest.s2sf";
const SOURCE_VOCAB: &str = "source.vocab";
const TARGET_VOCAB: &str = "target.vocab";
const METRICS: &str = "metrics.csv";

#[pymethods]
impl Model {
    /// `pairs` are raw sentence pairs; both sides are normalized with the
    /// given scripts before the vocabularies are built.
    #[new]
    #[pyo3(signature = (
        pairs, source_script = "english", target_script = "bangla", cell = "gru", embed_dim = 32, units = 64,
        attention_dim = None, encoder_activation = "linear", decoder_activation = "tanh",
        attention_inner = "sigmoid", attention_outer = "softmax", batch_size = 16, learning_rate = 1e-3, seed = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        pairs: Vec<(String, String)>,
        source_script: &str,
        target_script: &str,
        cell: &str,
        embed_dim: usize,
        units: usize,
        attention_dim: Option<usize>,
        encoder_activation: &str,
        decoder_activation: &str,
        attention_inner: &str,
        attention_outer: &str,
        batch_size: usize,
        learning_rate: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let scripts = ScriptPair { source: parse(source_script)?, target: parse(target_script)? };
        let tsv: String = pairs.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
        let corpus = ParallelCorpus::parse_tsv(&tsv, scripts).map_err(value_err)?.corpus;
        let data = PreparedData::from_corpus(&corpus).map_err(value_err)?;
        let settings = ModelSettings {
            cell: parse::<CellKind>(cell)?,
            embed_dim,
            units,
            attention_dim: attention_dim.unwrap_or(units),
            encoder_activation: parse(encoder_activation)?,
            decoder_activation: parse(decoder_activation)?,
            attention_inner: parse(attention_inner)?,
            attention_outer: parse(attention_outer)?,
        };
        let model = Seq2Seq::new(settings.to_config(&data), seed).map_err(value_err)?;
        let adam = AdamConfig { learning_rate, ..AdamConfig::default() };
        let options = TrainOptions { batch_size, seed, clip_norm: None };
        Ok(Self { trainer: Trainer::new(model, adam, options), data, scripts })
    }

    /// Trains `epochs` more epochs and returns their mean losses.
    fn train(&mut self, py: Python<'_>, epochs: u64) -> PyResult<Vec<f64>> {
        let target = self.trainer.epochs_completed() + epochs;
        let (trainer, pairs) = (&mut self.trainer, &self.data.pairs);
        py.detach(|| trainer.train_until(pairs, target)).map_err(value_err)?;
        let losses = self.trainer.log.losses();
        Ok(losses[losses.len() - epochs as usize..].to_vec())
    }

    /// Mean per-token loss over the training pairs.
    fn evaluate(&self) -> PyResult<f64> {
        evaluate(&self.trainer.model, &self.data.pairs, self.trainer.options.batch_size).map_err(value_err)
    }

    fn translate(&self, sentence: &str) -> PyResult<String> {
        self.trainer
            .model
            .translate(&self.data.source_vocab, &self.data.target_vocab, sentence, self.scripts.source)
            .map_err(value_err)
    }

    #[getter]
    fn epochs(&self) -> u64 {
        self.trainer.epochs_completed()
    }

    #[getter]
    fn losses(&self) -> Vec<f64> {
        self.trainer.log.losses()
    }

    #[getter]
    fn source_vocab(&self) -> Vocabulary {
        Vocabulary(self.data.source_vocab.clone())
    }

    #[getter]
    fn target_vocab(&self) -> Vocabulary {
        Vocabulary(self.data.target_vocab.clone())
    }

    /// Writes checkpoint, vocabularies and metrics into `dir`.
    fn save(&self, dir: PathBuf) -> PyResult<()> {
        fs::create_dir_all(&dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let ckpt = Checkpoint::capture(
            &self.trainer,
            self.data.source_vocab.fingerprint(),
            self.data.target_vocab.fingerprint(),
        );
        save_checkpoint(&dir.join(CHECKPOINT), &ckpt).map_err(value_err)?;
        self.data.source_vocab.save(&dir.join(SOURCE_VOCAB)).map_err(value_err)?;
        self.data.target_vocab.save(&dir.join(TARGET_VOCAB)).map_err(value_err)?;
        fs::write(dir.join(METRICS), self.trainer.log.to_csv(false)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Restores a model written by `save`. `pairs` are the training pairs to
    /// continue on; without them the model can translate but not train.
    #[staticmethod]
    #[pyo3(signature = (dir, pairs = None, source_script = "english", target_script = "bangla", batch_size = 16, seed = 0))]
    fn load(
        dir: PathBuf,
        pairs: Option<Vec<(String, String)>>,
        source_script: &str,
        target_script: &str,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let scripts = ScriptPair { source: parse(source_script)?, target: parse(target_script)? };
        let ckpt = load_checkpoint(&dir.join(CHECKPOINT)).map_err(value_err)?;
        let source_vocab = CoreVocabulary::load(&dir.join(SOURCE_VOCAB)).map_err(value_err)?;
        let target_vocab = CoreVocabulary::load(&dir.join(TARGET_VOCAB)).map_err(value_err)?;
        ckpt.validate(None, &source_vocab.fingerprint(), &target_vocab.fingerprint()).map_err(value_err)?;
        let metrics = fs::read_to_string(dir.join(METRICS)).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let log = TrainLog::parse_csv(&metrics).map_err(value_err)?;
        let (max_source_len, max_target_len) = (ckpt.config.max_source_len, ckpt.config.max_target_len);
        let encoded = match pairs {
            Some(pairs) => {
                let tsv: String = pairs.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
                let corpus = ParallelCorpus::parse_tsv(&tsv, scripts).map_err(value_err)?.corpus;
                attnmt::text::encode_corpus(&corpus, &source_vocab, &target_vocab, max_source_len, max_target_len)
                    .map_err(value_err)?
                    .0
            }
            None => Vec::new(),
        };
        let options = TrainOptions { batch_size, seed, clip_norm: None };
        Ok(Self {
            trainer: ckpt.into_trainer(log, options).map_err(value_err)?,
            data: PreparedData { source_vocab, target_vocab, max_source_len, max_target_len, pairs: encoded },
            scripts,
        })
    }
}

#[pymodule]
fn attnmt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Vocabulary>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(normalize_text, m)?)?;
    m.add_function(wrap_pyfunction!(activate, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
