use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    CliError, Command, ExperimentArgs, ModelArgs, PrepArgs, Preset, TrainArgs, TranslateArgs, EXIT_DATA, EXIT_OK,
    EXIT_RUNTIME,
};
use crate::error::Error;
use crate::harness::{
    run_study, write_report, CorpusSource, ExperimentSpec, ModelSettings, Study, SyntheticKind, SyntheticSpec,
};
use crate::model::{ModelConfig, Seq2Seq};
use crate::text::{
    encode_corpus, required_len, split_corpus, EncodedDataset, ParallelCorpus, ScriptPair, VocabStats, Vocabulary,
};
use crate::train::{
    evaluate, load_checkpoint, save_checkpoint, AdamConfig, Checkpoint, TrainLog, TrainOptions, Trainer,
};

pub const SOURCE_VOCAB_FILE: &str = "source.vocab";
pub const TARGET_VOCAB_FILE: &str = "target.vocab";
pub const DATASET_FILE: &str = "dataset.txt";
pub const STATS_FILE: &str = "stats.json";
pub const CHECKPOINT_FILE: &str = "latest.s2sf";
pub const METRICS_FILE: &str = "metrics.csv";

type CmdResult = Result<i32, CliError>;

pub(super) fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Prep(a) => prep(a),
        Command::Train(a) => train(a),
        Command::Translate(a) => translate(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Failures reading user-supplied inputs are data errors whatever their cause.
fn input(e: Error) -> CliError {
    CliError::Data(e)
}

fn print_resolved(value: serde_json::Value) {
    eprintln!("resolved config: {value}");
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideStats {
    pub total_words: usize,
    pub unique_words: usize,
    pub vocab_size: usize,
    pub max_len: usize,
}

/// Contents of `stats.json` in a prepared directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepStats {
    pub scripts: ScriptPair,
    pub pairs: usize,
    pub dropped_pairs: usize,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub truncated_test_sentences: usize,
    pub source: SideStats,
    pub target: SideStats,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(Error::io(path, e)))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Runtime(Error::io(path, e)))
}

fn prep(a: PrepArgs) -> CmdResult {
    let scripts = ScriptPair { source: a.source_script, target: a.target_script };
    print_resolved(json!({
        "command": "prep",
        "corpus": a.corpus,
        "out": a.out,
        "train_ratio": a.train_ratio,
        "scripts": scripts,
        "seed": a.common.seed,
    }));
    if !(a.train_ratio > 0.0 && a.train_ratio <= 1.0) {
        return Err(CliError::Usage(format!("--train-ratio must be in (0, 1], got {}", a.train_ratio)));
    }
    let loaded = ParallelCorpus::read_tsv(&a.corpus, scripts).map_err(input)?;
    let corpus = loaded.corpus;
    let (train, test) = if a.train_ratio == 1.0 {
        (corpus.clone(), ParallelCorpus::default())
    } else {
        split_corpus(&corpus, a.train_ratio, a.common.seed)?
    };

    let (source_vocab, _) = Vocabulary::build(&train.sources())?;
    let (target_vocab, _) = Vocabulary::build(&train.targets())?;
    let (_, source_stats): (_, VocabStats) = Vocabulary::build(&corpus.sources())?;
    let (_, target_stats): (_, VocabStats) = Vocabulary::build(&corpus.targets())?;
    let max_source_len = required_len(&train.sources());
    let max_target_len = required_len(&train.targets());
    let (train_pairs, _) = encode_corpus(&train, &source_vocab, &target_vocab, max_source_len, max_target_len)?;
    let (test_pairs, truncated) = encode_corpus(&test, &source_vocab, &target_vocab, max_source_len, max_target_len)?;

    let stats = PrepStats {
        scripts,
        pairs: corpus.len(),
        dropped_pairs: loaded.dropped,
        train_pairs: train_pairs.len(),
        test_pairs: test_pairs.len(),
        truncated_test_sentences: truncated,
        source: SideStats {
            total_words: source_stats.total_words,
            unique_words: source_stats.unique_words,
            vocab_size: source_vocab.len(),
            max_len: max_source_len,
        },
        target: SideStats {
            total_words: target_stats.total_words,
            unique_words: target_stats.unique_words,
            vocab_size: target_vocab.len(),
            max_len: max_target_len,
        },
    };
    let dataset = EncodedDataset { max_source_len, max_target_len, train: train_pairs, test: test_pairs };
    let stats_json = serde_json::to_string_pretty(&stats).map_err(|e| CliError::Runtime(e.into()))? + "\n";

    create_dir(&a.out)?;
    write_file(&a.out.join(SOURCE_VOCAB_FILE), source_vocab.to_file_string())?;
    write_file(&a.out.join(TARGET_VOCAB_FILE), target_vocab.to_file_string())?;
    write_file(&a.out.join(DATASET_FILE), dataset.to_file_string())?;
    write_file(&a.out.join(STATS_FILE), &stats_json)?;
    print!("{stats_json}");
    Ok(EXIT_OK)
}

struct Prepared {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    dataset: EncodedDataset,
    stats: Option<PrepStats>,
}

fn load_prepared(dir: &Path, with_dataset: bool) -> Result<Prepared, CliError> {
    let source_vocab = Vocabulary::load(&dir.join(SOURCE_VOCAB_FILE)).map_err(input)?;
    let target_vocab = Vocabulary::load(&dir.join(TARGET_VOCAB_FILE)).map_err(input)?;
    let dataset = if with_dataset {
        EncodedDataset::load(&dir.join(DATASET_FILE)).map_err(input)?
    } else {
        EncodedDataset { max_source_len: 0, max_target_len: 0, train: Vec::new(), test: Vec::new() }
    };
    let stats_path = dir.join(STATS_FILE);
    let stats = match fs::read_to_string(&stats_path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| input(e.into()))?),
        Err(_) => None,
    };
    Ok(Prepared { source_vocab, target_vocab, dataset, stats })
}

fn model_settings(m: &ModelArgs, preset: Preset) -> ModelSettings {
    let units = m.units.unwrap_or(preset.units());
    ModelSettings {
        cell: m.cell,
        embed_dim: m.embed_dim.unwrap_or(preset.embed_dim()),
        units,
        attention_dim: m.attention_dim.unwrap_or(units),
        encoder_activation: m.encoder_activation,
        decoder_activation: m.decoder_activation,
        attention_inner: m.attention_inner,
        attention_outer: m.attention_outer,
    }
}

fn adam_config(m: &ModelArgs) -> Result<AdamConfig, CliError> {
    if !(m.lr >= 0.0 && m.lr.is_finite()) {
        return Err(CliError::Usage(format!("--lr must be a non-negative number, got {}", m.lr)));
    }
    if let Some(c) = m.clip_norm {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Usage(format!("--clip-norm must be positive, got {c}")));
        }
    }
    Ok(AdamConfig { learning_rate: m.lr, ..AdamConfig::default() })
}

fn train(a: TrainArgs) -> CmdResult {
    let settings = model_settings(&a.model, a.preset);
    let batch_size = a.model.batch_size.unwrap_or(a.preset.batch_size());
    let adam = adam_config(&a.model)?;
    if batch_size == 0 || a.epochs == 0 || a.checkpoint_every == 0 {
        return Err(CliError::Usage("--batch-size, --epochs and --checkpoint-every must be positive".into()));
    }
    settings.validate().map_err(usage)?;

    let prepared = load_prepared(&a.prep_dir, true)?;
    let config = ModelConfig {
        cell: settings.cell,
        embed_dim: settings.embed_dim,
        units: settings.units,
        attention_dim: settings.attention_dim,
        encoder_activation: settings.encoder_activation,
        decoder_activation: settings.decoder_activation,
        attention_inner: settings.attention_inner,
        attention_outer: settings.attention_outer,
        source_vocab_size: prepared.source_vocab.len(),
        target_vocab_size: prepared.target_vocab.len(),
        max_source_len: prepared.dataset.max_source_len,
        max_target_len: prepared.dataset.max_target_len,
    };
    config.validate().map_err(input)?;
    let options = TrainOptions { batch_size, seed: a.common.seed, clip_norm: a.model.clip_norm };
    print_resolved(json!({
        "command": "train",
        "prep_dir": a.prep_dir,
        "checkpoint_dir": a.checkpoint_dir,
        "model": config,
        "epochs": a.epochs,
        "batch_size": batch_size,
        "adam": adam,
        "clip_norm": a.model.clip_norm,
        "checkpoint_every": a.checkpoint_every,
        "timing": a.timing,
        "seed": a.common.seed,
    }));
    let pairs = &prepared.dataset.train;
    if pairs.is_empty() {
        return Err(CliError::Data(Error::EmptyInput("prepared training split is empty".into())));
    }
    let source_fp = prepared.source_vocab.fingerprint();
    let target_fp = prepared.target_vocab.fingerprint();

    let checkpoint_path = a.checkpoint_dir.join(CHECKPOINT_FILE);
    let metrics_path = a.checkpoint_dir.join(METRICS_FILE);
    let mut trainer = if checkpoint_path.exists() {
        let ckpt = load_checkpoint(&checkpoint_path).map_err(input)?;
        ckpt.validate(Some(&config), &source_fp, &target_fp).map_err(|e| CliError::Data(Error::Checkpoint(e)))?;
        let log = if ckpt.epoch_reached == 0 {
            TrainLog::new()
        } else {
            let text = fs::read_to_string(&metrics_path).map_err(|e| input(Error::io(&metrics_path, e)))?;
            TrainLog::parse_csv(&text).map_err(input)?
        };
        eprintln!("resuming from {} at epoch {}", checkpoint_path.display(), ckpt.epoch_reached);
        let mut t = ckpt.into_trainer(log, options).map_err(input)?;
        t.optimizer.config = adam;
        t
    } else {
        Trainer::new(Seq2Seq::new(config, a.common.seed)?, adam, options)
    };

    create_dir(&a.checkpoint_dir)?;
    let save = |t: &Trainer<f32>| -> Result<(), CliError> {
        save_checkpoint(&checkpoint_path, &Checkpoint::capture(t, source_fp.clone(), target_fp.clone()))
            .map_err(CliError::Runtime)?;
        write_file(&metrics_path, t.log.to_csv(a.timing))
    };
    while trainer.epochs_completed() < a.epochs {
        let loss = trainer.train_epoch(pairs).map_err(CliError::Runtime)?;
        let epoch = trainer.epochs_completed();
        eprintln!("epoch {epoch} loss {loss:.6}");
        if epoch % a.checkpoint_every == 0 || epoch == a.epochs {
            save(&trainer)?;
        }
    }
    if !checkpoint_path.exists() {
        save(&trainer)?;
    }
    if !prepared.dataset.test.is_empty() {
        let test_loss = evaluate(&trainer.model, &prepared.dataset.test, batch_size).map_err(CliError::Runtime)?;
        eprintln!("test loss {test_loss:.6}");
    }
    Ok(EXIT_OK)
}

fn translate(a: TranslateArgs) -> CmdResult {
    let checkpoint_path = if a.checkpoint.is_dir() { a.checkpoint.join(CHECKPOINT_FILE) } else { a.checkpoint.clone() };
    print_resolved(json!({
        "command": "translate",
        "checkpoint": checkpoint_path,
        "prep_dir": a.prep_dir,
        "sentence": a.sentence,
        "input": a.input,
        "seed": a.common.seed,
    }));
    let ckpt = load_checkpoint(&checkpoint_path).map_err(input)?;
    let prepared = load_prepared(&a.prep_dir, false)?;
    ckpt.validate(None, &prepared.source_vocab.fingerprint(), &prepared.target_vocab.fingerprint())
        .map_err(|e| CliError::Data(Error::Checkpoint(e)))?;
    let model = ckpt.model().map_err(input)?;
    let source_script = prepared.stats.map(|s| s.scripts).unwrap_or_default().source;

    let lines: Vec<String> = match (&a.sentence, &a.input) {
        (Some(s), _) => vec![s.clone()],
        (None, Some(path)) => {
            fs::read_to_string(path).map_err(|e| input(Error::io(path, e)))?.lines().map(str::to_string).collect()
        }
        (None, None) => io::stdin()
            .lock()
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| input(Error::io(PathBuf::from("<stdin>"), e)))?,
    };
    let mut failed = false;
    for line in &lines {
        match model.translate(&prepared.source_vocab, &prepared.target_vocab, line, source_script) {
            Ok(out) => println!("{out}"),
            Err(e) => {
                println!("#error: {e}");
                failed = true;
            }
        }
    }
    Ok(if failed { EXIT_DATA } else { EXIT_OK })
}

fn experiment(a: ExperimentArgs) -> CmdResult {
    let study: Study = a.study;
    let settings = model_settings(&a.model, a.preset);
    let adam = adam_config(&a.model)?;
    let cells = study == Study::Cells;
    let corpus = match &a.corpus {
        Some(path) => CorpusSource::File {
            path: path.clone(),
            scripts: ScriptPair { source: a.source_script, target: a.target_script },
        },
        None => CorpusSource::Synthetic(SyntheticSpec {
            kind: a.synthetic.unwrap_or(if cells { SyntheticKind::Copy } else { SyntheticKind::MappedBilingual }),
            n_pairs: a.n_pairs,
            vocab_size: a.vocab_size.unwrap_or(if cells { 20 } else { 30 }),
            max_len: a.max_len.unwrap_or(if cells { 5 } else { 6 }),
            seed: a.corpus_seed.unwrap_or(a.common.seed),
        }),
    };
    let mut spec = ExperimentSpec::new(
        study,
        settings,
        corpus,
        a.epochs.unwrap_or(study.default_epochs()),
        a.common.seed,
        a.model.batch_size.unwrap_or(a.preset.batch_size()),
    );
    spec.adam = adam;
    spec.clip_norm = a.model.clip_norm;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{study}.csv")));
    print_resolved(json!({
        "command": "experiment",
        "out": out,
        "spec": spec,
    }));
    spec.validate().map_err(usage)?;
    if study == Study::EpochStudy && !spec.epochs.is_multiple_of(2) {
        return Err(CliError::Usage(format!("epoch-study needs an even --epochs, got {}", spec.epochs)));
    }
    spec.corpus.load().map_err(input)?;

    let report = run_study(&spec).map_err(CliError::Runtime)?;
    write_report(&report, &spec, &out).map_err(CliError::Runtime)?;
    print!("{}", report.to_csv());
    if report.is_complete() {
        Ok(EXIT_OK)
    } else {
        for (label, msg) in &report.failures {
            eprintln!("error: {label}: {msg}");
        }
        Ok(EXIT_RUNTIME)
    }
}
