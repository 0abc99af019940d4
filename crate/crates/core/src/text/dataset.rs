use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::corpus::EncodedPair;
use super::vocab::{EncodedSequence, END, PAD};
use crate::error::{Error, Result};

const HEADER_PREFIX: &str = "#encoded v1";

/// Train and test pairs as written by `prep`.
///
/// ```text
/// #encoded v1 <max_source_len> <max_target_len>
/// train<TAB>5 11 2 0 0<TAB>7 2 0
/// test<TAB>...
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDataset {
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub train: Vec<EncodedPair>,
    pub test: Vec<EncodedPair>,
}

impl EncodedSequence {
    /// Rebuilds a sequence from its padded ids. The ids must hold one end
    /// token followed only by pads.
    pub fn from_padded(ids: Vec<usize>) -> Result<Self> {
        let end = ids
            .iter()
            .position(|&i| i == END)
            .ok_or_else(|| Error::InvalidConfig("encoded sequence has no end token".into()))?;
        if end == 0 || ids[..end].contains(&PAD) || ids[end + 1..].iter().any(|&i| i != PAD) {
            return Err(Error::InvalidConfig("encoded sequence is not words, end, pads".into()));
        }
        Ok(Self { ids, true_length: end + 1, truncated: false })
    }
}

fn ids_field(seq: &EncodedSequence) -> String {
    let parts: Vec<String> = seq.ids.iter().map(usize::to_string).collect();
    parts.join(" ")
}

impl EncodedDataset {
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{HEADER_PREFIX} {} {}\n", self.max_source_len, self.max_target_len);
        for (split, pairs) in [("train", &self.train), ("test", &self.test)] {
            for p in pairs {
                writeln!(out, "{split}\t{}\t{}", ids_field(&p.source), ids_field(&p.target)).unwrap();
            }
        }
        out
    }

    pub fn parse_file_string(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::MalformedLine { line, message };
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let dims: Vec<usize> = header
            .strip_prefix(HEADER_PREFIX)
            .map(|rest| rest.split_whitespace().filter_map(|v| v.parse().ok()).collect())
            .unwrap_or_default();
        let [max_source_len, max_target_len] = dims[..] else {
            return Err(bad(1, format!("expected `{HEADER_PREFIX} <source len> <target len>`")));
        };
        let mut data = Self { max_source_len, max_target_len, train: Vec::new(), test: Vec::new() };
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            let [split, src, tgt] = fields[..] else {
                return Err(bad(n, "expected split, source ids and target ids".into()));
            };
            let seq = |field: &str, len: usize| -> Result<EncodedSequence> {
                let ids = field
                    .split(' ')
                    .map(|v| v.parse::<usize>().map_err(|_| bad(n, format!("bad id `{v}`"))))
                    .collect::<Result<Vec<_>>>()?;
                if ids.len() != len {
                    return Err(bad(n, format!("expected {len} ids, found {}", ids.len())));
                }
                EncodedSequence::from_padded(ids).map_err(|e| bad(n, e.to_string()))
            };
            let pair = EncodedPair { source: seq(src, max_source_len)?, target: seq(tgt, max_target_len)? };
            match split {
                "train" => data.train.push(pair),
                "test" => data.test.push(pair),
                other => return Err(bad(n, format!("unknown split `{other}`"))),
            }
        }
        Ok(data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_file_string(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[usize]) -> EncodedSequence {
        EncodedSequence::from_padded(ids.to_vec()).unwrap()
    }

    #[test]
    fn round_trip() {
        let data = EncodedDataset {
            max_source_len: 4,
            max_target_len: 3,
            train: vec![EncodedPair { source: seq(&[5, 6, 2, 0]), target: seq(&[4, 2, 0]) }],
            test: vec![EncodedPair { source: seq(&[3, 2, 0, 0]), target: seq(&[7, 5, 2]) }],
        };
        let text = data.to_file_string();
        assert!(text.starts_with("#encoded v1 4 3\ntrain\t5 6 2 0\t4 2 0\n"));
        assert_eq!(EncodedDataset::parse_file_string(&text).unwrap(), data);
    }

    #[test]
    fn from_padded_checks_layout() {
        assert_eq!(seq(&[9, 2, 0]).true_length, 2);
        assert!(EncodedSequence::from_padded(vec![9, 0, 0]).is_err());
        assert!(EncodedSequence::from_padded(vec![2, 0]).is_err());
        assert!(EncodedSequence::from_padded(vec![9, 2, 5]).is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(EncodedDataset::parse_file_string("garbage\n").is_err());
        let err = EncodedDataset::parse_file_string("#encoded v1 2 2\ntrain\t4 2\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }
}
