//! Experience pools for cooperative code-generation agents.
//!
//! Two agents (one instructive, one responsive) solve software tasks in
//! rounds, leaving behind a linear execution chain per task. This crate
//! mines those chains for shortcuts — synthesized instructions that jump
//! non-adjacent chain nodes — stores them as retrievable key-value
//! experiences, propagates pools across task batches under successive,
//! cumulative, or elimination-augmented schedules, and computes the
//! software-quality and propagation metrics of a run.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`chain`]: per-task execution records.
//! - [`acquisition`]: shortcut mining and key-value projection.
//! - [`pool`]: retrievable experience stores with usage accounting.
//! - [`elimination`]: information-gain and usage-frequency pruning.
//! - [`propagation`]: batch partitioning and end-to-end run schedules.
//! - [`metrics`]: completeness/executability/consistency/quality, phase
//!   efficiency, hit ratios, and the cross-batch utilization matrix.
//! - [`backends`]: agents, embedders, and the compile sandbox, each with a
//!   deterministic offline double.

pub mod acquisition;
pub mod artifact;
pub mod backends;
pub mod chain;
pub mod checkpoint;
pub mod elimination;
pub mod error;
pub mod metrics;
pub mod pool;
pub mod propagation;
pub mod report;

pub use artifact::{Artifact, SourceFile};
pub use chain::{ExecutionChain, Instruction, Phase, Solution};
pub use error::{Error, Result};
pub use pool::{ExperiencePool, ExperienceRecord, RecordKind};
