//! Grid sweeps, bias-onset detection and the vocabulary study.

pub mod onset;
pub mod stats;
pub mod sweep;
pub mod vocab;

pub use onset::{
    detect_bias_onset, two_phase_check, TwoPhaseReport, DEFAULT_MARGIN, DEFAULT_THRESHOLD,
};
pub use stats::{pearson_p, pearson_r, spearman};
pub use sweep::{
    grid_summary_csv, job_seed, run_job, run_sweep, run_sweep_with, score, sweep_csv, Cell,
    ModelKind, RunRecord, RunSettings, SweepConfig, SweepGrid,
};
pub use vocab::{
    correlation_csv, correlation_summary, metric1_within, metric2_across, run_vocab_accel,
    run_vocab_accel_with, run_vocab_network, vocab_csv, Metric1, SeriesMode, Session, VocabConfig,
    VocabOutcome, VocabRecord,
};
