//! Communication-mode assignment for multi-mode vehicle networks.
//!
//! A source node holds a batch of transmission tasks and several link modes,
//! each with its own bandwidth and backlog. Every task is given exactly one
//! supported mode so that the largest channel delay is as small as possible.
//!
//! - [`model`]: instances, assignments and delay semantics.
//! - [`aarlm`]: greedy start plus reward-driven bottleneck moves tracked in a Q-table.
//! - [`baselines`]: random selection, simulated annealing, exact branch-and-bound.
//! - [`scenario`]: seeded instance generation and parameter sweeps.
//! - [`harness`]: sweep execution, aggregation, CSV output and trend checks.

pub mod aarlm;
pub mod baselines;
pub mod error;
pub mod files;
pub mod format;
pub mod harness;
pub mod model;
pub mod scenario;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Assignment, DelayModel, DelayReport, Instance};
