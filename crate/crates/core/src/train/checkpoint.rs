//! Binary checkpoint container.
//!
//! ```text
//! "S2SF"                      magic
//! u32                         format version
//! u32 + bytes                 JSON header (config, vocab fingerprints, optimizer scalars, epoch)
//! u32 count, then entries     parameters
//! u32 count, then entries     Adam first moments
//! u32 count, then entries     Adam second moments
//! u64                         checksum of all preceding bytes
//!
//! entry: u32 name length, name bytes, u32 rank, rank × u64 extents, f32 values
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::{AdamConfig, OptimizerState};
use super::metrics::TrainLog;
use super::trainer::{TrainOptions, Trainer};
use crate::error::{CheckpointError, Error, Result};
use crate::model::{ModelConfig, Parameters, Seq2Seq};
use crate::tensor::Tensor;
use crate::text::VocabFingerprint;

pub const MAGIC: &[u8; 4] = b"S2SF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    source_vocab: VocabFingerprint,
    target_vocab: VocabFingerprint,
    adam: AdamConfig,
    step_count: u64,
    epoch_reached: u64,
}

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub source_vocab: VocabFingerprint,
    pub target_vocab: VocabFingerprint,
    pub params: Parameters<f32>,
    pub optimizer: OptimizerState<f32>,
    pub epoch_reached: u64,
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensors(out: &mut Vec<u8>, tensors: &Parameters<f32>) {
    put_u32(out, tensors.len() as u32);
    for (name, t) in tensors {
        put_u32(out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(out, t.rank() as u32);
        for &extent in t.shape() {
            out.extend_from_slice(&(extent as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| CheckpointError::Corrupt(format!("file truncated while reading {what}")))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn tensors(&mut self, section: &str) -> Result<Parameters<f32>, CheckpointError> {
        let count = self.u32(section)?;
        let mut out = Parameters::new();
        for _ in 0..count {
            let len = self.u32("tensor name length")? as usize;
            let name = std::str::from_utf8(self.take(len, "tensor name")?)
                .map_err(|_| CheckpointError::Corrupt("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = self.u32("tensor rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            let mut numel: usize = 1;
            for _ in 0..rank {
                let extent = usize::try_from(self.u64("tensor extent")?)
                    .map_err(|_| CheckpointError::Corrupt(format!("extent of `{name}` overflows")))?;
                numel = numel
                    .checked_mul(extent)
                    .ok_or_else(|| CheckpointError::Corrupt(format!("size of `{name}` overflows")))?;
                shape.push(extent);
            }
            let bytes_needed =
                numel.checked_mul(4).ok_or_else(|| CheckpointError::Corrupt(format!("size of `{name}` overflows")))?;
            let raw = self.take(bytes_needed, &format!("values of `{name}`"))?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            let tensor = Tensor::new(shape, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
            if out.insert(name.clone(), tensor).is_some() {
                return Err(CheckpointError::Corrupt(format!("duplicate tensor `{name}`")));
            }
        }
        Ok(out)
    }
}

impl Checkpoint {
    pub fn capture(trainer: &Trainer<f32>, source_vocab: VocabFingerprint, target_vocab: VocabFingerprint) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config: trainer.model.config().clone(),
            source_vocab,
            target_vocab,
            params: trainer.model.params().clone(),
            optimizer: trainer.optimizer.clone(),
            epoch_reached: trainer.epochs_completed(),
        }
    }

    pub fn model(&self) -> Result<Seq2Seq<f32>> {
        Seq2Seq::from_parameters(self.config.clone(), self.params.clone())
    }

    /// Rebuilds a trainer; `log` should hold the first `epoch_reached` epochs.
    pub fn into_trainer(self, mut log: TrainLog, options: TrainOptions) -> Result<Trainer<f32>> {
        if log.last_epoch() < self.epoch_reached {
            return Err(Error::InvalidConfig(format!(
                "metrics log covers {} epochs but the checkpoint reached {}",
                log.last_epoch(),
                self.epoch_reached
            )));
        }
        log.truncate(self.epoch_reached);
        Ok(Trainer {
            model: Seq2Seq::from_parameters(self.config, self.params)?,
            optimizer: self.optimizer,
            log,
            options,
        })
    }

    /// Refuses a checkpoint whose vocabularies (or, when given, config) differ
    /// from the current session.
    pub fn validate(
        &self,
        config: Option<&ModelConfig>,
        source_vocab: &VocabFingerprint,
        target_vocab: &VocabFingerprint,
    ) -> Result<(), CheckpointError> {
        for (side, stored, found) in
            [("source", &self.source_vocab, source_vocab), ("target", &self.target_vocab, target_vocab)]
        {
            if stored != found {
                return Err(CheckpointError::FingerprintMismatch {
                    side,
                    expected: stored.to_string(),
                    found: found.to_string(),
                });
            }
        }
        if let Some(config) = config {
            if config != &self.config {
                return Err(CheckpointError::ConfigMismatch(format!(
                    "checkpoint {:?}, session {:?}",
                    self.config, config
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            source_vocab: self.source_vocab.clone(),
            target_vocab: self.target_vocab.clone(),
            adam: self.optimizer.config,
            step_count: self.optimizer.step_count,
            epoch_reached: self.epoch_reached,
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, self.format_version);
        put_u32(&mut out, header.len() as u32);
        out.extend_from_slice(&header);
        put_tensors(&mut out, &self.params);
        put_tensors(&mut out, &self.optimizer.first_moment);
        put_tensors(&mut out, &self.optimizer.second_moment);
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32("format version")?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion { found: version, supported: FORMAT_VERSION });
        }
        let header_len = r.u32("header length")? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len, "header")?)
            .map_err(|e| CheckpointError::Corrupt(format!("header: {e}")))?;
        let params = r.tensors("parameters")?;
        let first_moment = r.tensors("first moments")?;
        let second_moment = r.tensors("second moments")?;
        let body_end = r.pos;
        let stored = r.u64("checksum")?;
        if r.pos != bytes.len() {
            return Err(CheckpointError::Corrupt(format!("{} unexpected trailing bytes", bytes.len() - r.pos)));
        }
        let computed = checksum(&bytes[..body_end]);
        if stored != computed {
            return Err(CheckpointError::ChecksumMismatch { stored, computed });
        }
        Ok(Self {
            format_version: version,
            config: header.config,
            source_vocab: header.source_vocab,
            target_vocab: header.target_vocab,
            params,
            optimizer: OptimizerState {
                config: header.adam,
                step_count: header.step_count,
                first_moment,
                second_moment,
            },
            epoch_reached: header.epoch_reached,
        })
    }
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let bytes = checkpoint.to_bytes()?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Checkpoint::from_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = ModelConfig::new(6, 7, 3, 4, 2, 3);
        let model = Seq2Seq::<f32>::new(config, 5).unwrap();
        let mut opt = OptimizerState::new(AdamConfig::default());
        let grads = model.params().iter().map(|(k, v)| (k.clone(), v.map(|x| x * 0.5 + 0.1))).collect();
        let mut params = model.params().clone();
        opt.adam_step(&mut params, &grads).unwrap();
        Checkpoint {
            format_version: FORMAT_VERSION,
            config: model.config().clone(),
            source_vocab: VocabFingerprint { size: 6, hash: "aa".into() },
            target_vocab: VocabFingerprint { size: 7, hash: "bb".into() },
            params,
            optimizer: opt,
            epoch_reached: 3,
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"S2SF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), FORMAT_VERSION);
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
    }

    #[test]
    fn corruption_is_reported_distinctly() {
        let bytes = sample().to_bytes().unwrap();

        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            let err = Checkpoint::from_bytes(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, CheckpointError::Corrupt(_) | CheckpointError::BadMagic), "cut {cut}: {err}");
        }

        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(matches!(
            Checkpoint::from_bytes(&wrong_version),
            Err(CheckpointError::UnsupportedVersion { found: 9, .. })
        ));

        let mut flipped = bytes.clone();
        let last_value = bytes.len() - 9;
        flipped[last_value] ^= 0x40;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(CheckpointError::ChecksumMismatch { .. })));

        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad_magic), Err(CheckpointError::BadMagic)));
    }

    #[test]
    fn validation_against_session() {
        let ck = sample();
        ck.validate(Some(&ck.config), &ck.source_vocab, &ck.target_vocab).unwrap();
        let other = VocabFingerprint { size: 7, hash: "cc".into() };
        assert!(matches!(
            ck.validate(None, &ck.source_vocab, &other),
            Err(CheckpointError::FingerprintMismatch { side: "target", .. })
        ));
        let mut config = ck.config.clone();
        config.units += 1;
        assert!(matches!(
            ck.validate(Some(&config), &ck.source_vocab, &ck.target_vocab),
            Err(CheckpointError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.s2sf");
        let ck = sample();
        save_checkpoint(&path, &ck).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ck);
        assert!(!dir.path().join("model.s2sf.tmp").exists());
    }
}
