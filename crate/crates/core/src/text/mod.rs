//! Corpus ingestion: normalization, frequency-ranked vocabularies, fixed-length
//! encoding, train/test splitting and batching.

mod corpus;
mod dataset;
mod normalize;
mod vocab;

pub use corpus::{
    batch_iterator, encode_corpus, split_corpus, BatchIter, EncodedPair, LoadedCorpus, ParallelCorpus, ScriptPair,
};
pub use dataset::EncodedDataset;
pub use normalize::{normalize_text, Script};
pub use vocab::{
    required_len, EncodedSequence, VocabFingerprint, VocabStats, Vocabulary, END, NUM_SPECIAL, PAD, START, UNK,
};
