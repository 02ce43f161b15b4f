//! Experiment runner for the reduction lab: generate an instance, reduce it,
//! decide it under certified precision, compare with brute force, report.

pub mod config;
pub mod report;
pub mod suite;
pub mod trial;

pub use config::{BenchSettings, DimensionRule, ExperimentConfig, ThresholdRule};
pub use report::{emit_report, render_report, ReportFormat, CSV_HEADER};
pub use suite::{bench_scaling, run_suite, Aggregate, ReductionSummary, RunReport, ScalingRow};
pub use trial::{decide_instance, run_trial, trial_seed, Cell, TrialRecord, TrialVerdict};
