use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{ParallelCorpus, Script, ScriptPair, NUM_SPECIAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Target equals source.
    Copy,
    /// Target is the source word order reversed.
    Reverse,
    /// Each source word maps to its own Bengali-script word; the first word
    /// moves to the end.
    MappedBilingual,
}

impl SyntheticKind {
    pub fn scripts(self) -> ScriptPair {
        match self {
            SyntheticKind::Copy | SyntheticKind::Reverse => {
                ScriptPair { source: Script::English, target: Script::English }
            }
            SyntheticKind::MappedBilingual => ScriptPair { source: Script::English, target: Script::Bangla },
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Copy => "copy",
            SyntheticKind::Reverse => "reverse",
            SyntheticKind::MappedBilingual => "mapped-bilingual",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(SyntheticKind::Copy),
            "reverse" => Ok(SyntheticKind::Reverse),
            "mapped-bilingual" | "mapped" => Ok(SyntheticKind::MappedBilingual),
            other => Err(Error::InvalidConfig(format!("unknown synthetic corpus kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_pairs: usize,
    /// Vocabulary size per side, counting the four reserved ids.
    pub vocab_size: usize,
    /// Encoded length including the end token; sentences have
    /// `1..=max_len - 1` words.
    pub max_len: usize,
    pub seed: u64,
}

const LATIN: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v', 'w',
    'x', 'y', 'z',
];

const BENGALI: &[char] = &[
    'ক', 'খ', 'গ', 'ঘ', 'ঙ', 'চ', 'ছ', 'জ', 'ঝ', 'ঞ', 'ট', 'ঠ', 'ড', 'ঢ', 'ণ', 'ত', 'থ', 'দ', 'ধ', 'ন', 'প', 'ফ', 'ব',
    'ভ', 'ম', 'য', 'র', 'ল', 'শ', 'ষ', 'স', 'হ',
];

/// Word `k` spelled in base `alphabet.len()`, two letters minimum.
fn spell(mut k: usize, alphabet: &[char]) -> String {
    let base = alphabet.len();
    let mut letters = Vec::new();
    loop {
        letters.push(alphabet[k % base]);
        k /= base;
        if k == 0 && letters.len() >= 2 {
            break;
        }
    }
    letters.iter().rev().collect()
}

pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<ParallelCorpus> {
    if spec.vocab_size <= NUM_SPECIAL {
        return Err(Error::InvalidConfig(format!(
            "synthetic vocab_size must be at least {}, got {}",
            NUM_SPECIAL + 1,
            spec.vocab_size
        )));
    }
    if spec.max_len < 2 {
        return Err(Error::InvalidConfig(format!("synthetic max_len must be at least 2, got {}", spec.max_len)));
    }
    let pool = spec.vocab_size - NUM_SPECIAL;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs = (0..spec.n_pairs)
        .map(|_| {
            let len = rng.gen_range(1..spec.max_len);
            let words: Vec<usize> = (0..len).map(|_| rng.gen_range(0..pool)).collect();
            let source: Vec<String> = words.iter().map(|&w| spell(w, LATIN)).collect();
            let target: Vec<String> = match spec.kind {
                SyntheticKind::Copy => source.clone(),
                SyntheticKind::Reverse => source.iter().rev().cloned().collect(),
                SyntheticKind::MappedBilingual => {
                    let mut mapped: Vec<String> = words.iter().map(|&w| spell(w, BENGALI)).collect();
                    mapped.rotate_left(1);
                    mapped
                }
            };
            (source.join(" "), target.join(" "))
        })
        .collect();
    ParallelCorpus::new(pairs)
}
