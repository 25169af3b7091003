//! Experiment runner for `charpoly-core`: configuration, result records, an
//! on-disk evaluation cache, and command dispatch.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod records;
pub mod run;

pub use cache::{CacheKey, FnCache};
pub use config::{CommandKind, Params, RunConfig, UsageError};
pub use records::ResultRecord;
pub use run::{run, RunOutcome};
