//! Experiment harness: declarative experiment configs, grid runners and tabular output.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod row;
pub mod runners;
pub mod spec;

pub use error::{HarnessError, Result};
pub use row::{ExperimentRow, Format, TraceRow};
pub use runners::{diagnose, run, Outcome, RunOptions, Summary};
pub use spec::{ExperimentSpec, Kind};
