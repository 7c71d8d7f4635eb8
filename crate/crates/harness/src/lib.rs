//! Experiment runner for `pes-core`: TOML specs, solver grids over seeds,
//! CSV traces and summaries, dataset files, and the acceptance suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dataset;
pub mod output;
pub mod run;
pub mod setup;
pub mod spec;

pub use output::{emit_csv, read_trace};
pub use run::{
    derive_seed, run_experiment, RunOptions, RunRecord, RunStatus, RunSummary, TraceRow,
};
pub use setup::auc_eval;
pub use spec::{parse_spec, ExperimentSpec, SpecError};
