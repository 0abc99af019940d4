//! Ablation studies: sweeps over activations, attention normalization and
//! cell type, plus the split-half epoch study.

mod experiment;
mod report;
mod stats;
mod synthetic;

pub use experiment::{
    row_summary, run_activation_grid, run_attention_grid, run_cell_comparison, run_epoch_study, run_study, run_sweep,
    ConfigOverride, CorpusSource, EpochStudy, ExperimentSpec, ModelSettings, PreparedData, RowOutcome, Study,
    SweepEntry,
};
pub use report::{sidecar_path, write_report, ReferenceValues, Report, ResultRow, REPORT_HEADER};
pub use stats::{split_halves, summarize, Summary};
pub use synthetic::{generate_synthetic_corpus, SyntheticKind, SyntheticSpec};
