//! Experiment harness: instance chains, repeated runs of every roster
//! algorithm, re-evaluation of outputs, timing and call accounting,
//! Welch tests, and JSON plus text reports.

mod experiment;
mod report;
mod stats;

pub use crate::timing::{time_algorithm, Timing};
pub use experiment::{
    aggregate, run_experiment, stat_tests, AlgorithmAggregate, AlgorithmSpec, ChainSpec, ExperimentConfig,
    ExperimentResult, InstanceAggregate, InstanceRecord, PairTest, PoolSpec, PreparationRecord, RunRow,
    StatTestReport,
};
pub use report::{emit_report, load_report, mask_timing, masked_report_bytes, render_table, Report, REPORT_JSON, REPORT_TABLE};
pub use stats::{median, welch_test, WelchTest, SIGNIFICANCE_LEVEL};
