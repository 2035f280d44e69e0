//! Measurement engine: training with component timers, batched/serial
//! equivalence checks, and aggregation of run records into speedups,
//! paired statistics and Pareto points.
//!
//! Wall-clock access is abstracted behind [`Clock`] so this crate stays
//! `no_std`; the `qbench` crate plugs in a monotonic system clock.

mod aggregate;
mod equivalence;
mod record;
mod train;

pub use aggregate::{
    accuracy_summary, compare_models, pareto_points, speedup_summary, timing_summary, AccuracySummary, IncompleteCell,
    Metric, ParetoPoint, SpeedupSummary, StatResult, TimingSummary,
};
pub use equivalence::{compare_traces, verify_equivalence, EQUIVALENCE_TOLERANCE};
pub use record::{BatchSetting, Component, RunRecord, Timings};
pub use train::{
    evaluate, run_cell, steps_per_epoch, train, CellConfig, CellOutcome, Clock, EvalReport, NoClock, TrainConfig,
    TrainReport,
};

/// Batch sizes of the benchmark grid.
pub const PAPER_BATCHES: [usize; 5] = [4, 8, 16, 32, 64];
