use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normalize::{normalize_text, Script};
use super::vocab::{EncodedSequence, Vocabulary};
use crate::error::{Error, Result};

/// Source/target sentence pairs, already normalized.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pairs: Vec<(String, String)>,
}

/// Scripts used to normalize the two sides of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptPair {
    pub source: Script,
    pub target: Script,
}

impl Default for ScriptPair {
    fn default() -> Self {
        Self { source: Script::English, target: Script::Bangla }
    }
}

/// Outcome of reading a tab-separated corpus.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: ParallelCorpus,
    /// Pairs dropped because one side normalized to nothing.
    pub dropped: usize,
}

impl ParallelCorpus {
    /// Pairs are taken as-is; empty sides are rejected.
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        if let Some(i) = pairs.iter().position(|(s, t)| s.trim().is_empty() || t.trim().is_empty()) {
            return Err(Error::EmptyInput(format!("pair {} has an empty side", i + 1)));
        }
        Ok(Self { pairs })
    }

    /// Parses `source<TAB>target` lines, normalizing each side. Blank lines
    /// are skipped; any other line without exactly one tab is rejected.
    pub fn parse_tsv(text: &str, scripts: ScriptPair) -> Result<LoadedCorpus> {
        let mut pairs = Vec::new();
        let mut dropped = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(src), Some(tgt), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    message: "expected exactly one tab separating source and target".into(),
                });
            };
            let src = normalize_text(src, scripts.source);
            let tgt = normalize_text(tgt, scripts.target);
            if src.is_empty() || tgt.is_empty() {
                dropped += 1;
                continue;
            }
            pairs.push((src, tgt));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyInput("corpus contains no usable sentence pairs".into()));
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} pairs with a side that normalized to nothing");
        }
        Ok(LoadedCorpus { corpus: Self { pairs }, dropped })
    }

    /// Reads a UTF-8 corpus file; invalid UTF-8 is an error.
    pub fn read_tsv(path: &Path, scripts: ScriptPair) -> Result<LoadedCorpus> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|e| Error::MalformedLine {
            line: 1 + bytes_line(e.as_bytes(), e.utf8_error().valid_up_to()),
            message: "invalid UTF-8".into(),
        })?;
        Self::parse_tsv(&text, scripts)
    }

    pub fn to_tsv(&self) -> String {
        self.pairs.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> Vec<&str> {
        self.pairs.iter().map(|(s, _)| s.as_str()).collect()
    }

    pub fn targets(&self) -> Vec<&str> {
        self.pairs.iter().map(|(_, t)| t.as_str()).collect()
    }
}

fn bytes_line(bytes: &[u8], upto: usize) -> usize {
    bytes[..upto].iter().filter(|&&b| b == b'\n').count()
}

/// Deterministic shuffle under `seed`, then a prefix split of
/// `floor(n * ratio)` training pairs.
pub fn split_corpus(corpus: &ParallelCorpus, ratio: f64, seed: u64) -> Result<(ParallelCorpus, ParallelCorpus)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    let n = corpus.len();
    // the epsilon absorbs products such as 0.29 * 100 = 28.999999999999996
    let n_train = (n as f64 * ratio + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::DegenerateSplit { total: n, ratio });
    }
    let mut pairs = corpus.pairs.clone();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = pairs.split_off(n_train);
    Ok((ParallelCorpus { pairs }, ParallelCorpus { pairs: test }))
}

/// An encoded source/target pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub source: EncodedSequence,
    pub target: EncodedSequence,
}

/// Encodes every pair; returns the pairs and how many sides were truncated.
pub fn encode_corpus(
    corpus: &ParallelCorpus,
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    max_source_len: usize,
    max_target_len: usize,
) -> Result<(Vec<EncodedPair>, usize)> {
    let mut truncated = 0;
    let pairs = corpus
        .pairs()
        .iter()
        .map(|(s, t)| {
            let source = source_vocab.encode_sentence(s, max_source_len)?;
            let target = target_vocab.encode_sentence(t, max_target_len)?;
            truncated += source.truncated as usize + target.truncated as usize;
            Ok(EncodedPair { source, target })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pairs, truncated))
}

/// Shuffled batches for one epoch. The order depends only on `(seed, epoch)`;
/// the final partial batch is kept.
pub struct BatchIter<'a, P> {
    items: &'a [P],
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

pub fn batch_iterator<P>(items: &[P], batch_size: usize, seed: u64, epoch: u64) -> BatchIter<'_, P> {
    assert!(batch_size >= 1, "batch_size must be positive");
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    BatchIter { items, order, batch_size, pos: 0 }
}

impl<'a, P> Iterator for BatchIter<'a, P> {
    type Item = Vec<&'a P>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self.order[self.pos..end].iter().map(|&i| &self.items[i]).collect();
        self.pos = end;
        Some(batch)
    }
}
