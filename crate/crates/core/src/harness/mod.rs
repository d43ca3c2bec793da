//! Batch evaluation: dataset ingestion, attack-suite execution, transcripts
//! and aggregate reports.

mod dataset;
mod report;
mod suite;

pub use dataset::{
    alphabet_fingerprint, extract_alphabet, load_dataset, Dataset, DatasetRecord, Format,
    LoadOptions,
};
pub use report::{mean_std, similarity, ReportBody, RunReport, SampleRow, TimingReport};
pub use suite::{
    open_oracle, read_transcript, replay, run_attack_suite, AttackKind, PairedOracle, SampleStatus,
    SuiteConfig, TranscriptLine, PAIR_SEPARATOR, TRANSCRIPT_SCHEMA_VERSION,
};

#[cfg(test)]
mod tests;
