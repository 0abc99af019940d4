use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const START: usize = 1;
pub const END: usize = 2;
pub const UNK: usize = 3;
/// Number of reserved ids; the first word gets this id.
pub const NUM_SPECIAL: usize = 4;

const SPECIAL_NAMES: [&str; NUM_SPECIAL] = ["<pad>", "<start>", "<end>", "<unk>"];
const FILE_HEADER: &str = "#vocab v1";

/// Word ↔ id map. Ids 0 to 3 are pad/start/end/unk; words start at 4 in
/// descending corpus frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_to_word: Vec<String>,
    word_to_id: HashMap<String, usize>,
}

/// Corpus word counts for one language side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabStats {
    pub total_words: usize,
    pub unique_words: usize,
}

/// Identity of a vocabulary as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabFingerprint {
    pub size: usize,
    pub hash: String,
}

impl fmt::Display for VocabFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} words/{}", self.size, self.hash)
    }
}

/// A sentence as a fixed-length id array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub ids: Vec<usize>,
    /// Non-pad positions, including the end token.
    pub true_length: usize,
    #[serde(default)]
    pub truncated: bool,
}

impl EncodedSequence {
    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_pad(&self, pos: usize) -> bool {
        pos >= self.true_length
    }
}

impl Vocabulary {
    /// Ranks words by descending frequency, ties broken by first occurrence.
    pub fn build<S: AsRef<str>>(sentences: &[S]) -> Result<(Self, VocabStats)> {
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut total_words = 0;
        for sentence in sentences {
            for word in sentence.as_ref().split_whitespace() {
                let next = counts.len();
                counts.entry(word).or_insert((0, next)).0 += 1;
                total_words += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyInput("cannot build a vocabulary from an empty corpus side".into()));
        }
        let mut ranked: Vec<(&str, usize, usize)> = counts.into_iter().map(|(w, (c, first))| (w, c, first)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let stats = VocabStats { total_words, unique_words: ranked.len() };
        let vocab = Self::from_words(ranked.into_iter().map(|(w, _, _)| w.to_string()))?;
        Ok((vocab, stats))
    }

    /// Assigns ids `4, 5, ...` to `words` in order.
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut id_to_word: Vec<String> = SPECIAL_NAMES.iter().map(|s| s.to_string()).collect();
        let mut word_to_id = HashMap::new();
        for word in words {
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidConfig(format!("invalid vocabulary entry {word:?}")));
            }
            if SPECIAL_NAMES.contains(&word.as_str()) || word_to_id.contains_key(&word) {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary entry {word:?}")));
            }
            word_to_id.insert(word.clone(), id_to_word.len());
            id_to_word.push(word);
        }
        Ok(Self { id_to_word, word_to_id })
    }

    /// Total id count including the reserved ones.
    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.len() == NUM_SPECIAL
    }

    pub fn word_count(&self) -> usize {
        self.id_to_word.len() - NUM_SPECIAL
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.id_to_word.get(id).map(String::as_str)
    }

    /// Non-special words in id order.
    pub fn words(&self) -> &[String] {
        &self.id_to_word[NUM_SPECIAL..]
    }

    pub fn fingerprint(&self) -> VocabFingerprint {
        let mut hasher = Sha256::new();
        for w in self.words() {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        VocabFingerprint { size: self.len(), hash: digest[..8].iter().map(|b| format!("{b:02x}")).collect() }
    }

    /// Word ids (unknowns → unk), then the end token, then pad up to `max_len`.
    /// Sentences that do not fit are cut to `max_len - 1` words and flagged.
    pub fn encode_sentence(&self, sentence: &str, max_len: usize) -> Result<EncodedSequence> {
        if max_len < 2 {
            return Err(Error::InvalidConfig(format!("max_len must be at least 2, got {max_len}")));
        }
        let words: Vec<&str> = sentence.split_whitespace().collect();
        if words.is_empty() {
            return Err(Error::EmptyInput("cannot encode an empty sentence".into()));
        }
        let truncated = words.len() + 1 > max_len;
        if truncated {
            log::warn!("sentence of {} words truncated to fit max_len {max_len}", words.len());
        }
        let mut ids: Vec<usize> = words.iter().take(max_len - 1).map(|w| self.id(w).unwrap_or(UNK)).collect();
        ids.push(END);
        let true_length = ids.len();
        ids.resize(max_len, PAD);
        Ok(EncodedSequence { ids, true_length, truncated })
    }

    /// Renders ids back to text, stopping at the first end token. Pad and start
    /// render as nothing, unk as `<unk>`.
    pub fn decode_sequence(&self, ids: &[usize]) -> Result<String> {
        let mut words = Vec::new();
        for &id in ids {
            match id {
                END => break,
                PAD | START => {}
                UNK => words.push(SPECIAL_NAMES[UNK]),
                _ => words.push(self.word(id).ok_or(Error::IdOutOfRange { id, size: self.len() })?),
            }
        }
        Ok(words.join(" "))
    }

    /// `#vocab v1 <count>` header, then one word per line; the n-th word line
    /// holds id `n + 3`.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{FILE_HEADER} {}\n", self.word_count());
        for w in self.words() {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn parse_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let count: usize =
            header.strip_prefix(FILE_HEADER).and_then(|rest| rest.trim().parse().ok()).ok_or_else(|| {
                Error::MalformedLine { line: 1, message: format!("expected `{FILE_HEADER} <count>` header") }
            })?;
        let words: Vec<String> = lines.map(str::to_string).collect();
        if words.len() != count {
            return Err(Error::MalformedLine {
                line: 1,
                message: format!("header declares {count} words, file has {}", words.len()),
            });
        }
        Self::from_words(words)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_file_string(&text)
    }
}

/// Longest sentence in words, plus one slot for the end token.
pub fn required_len<S: AsRef<str>>(sentences: &[S]) -> usize {
    sentences.iter().map(|s| s.as_ref().split_whitespace().count()).max().unwrap_or(0) + 1
}
