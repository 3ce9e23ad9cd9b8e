//! Orchestration layer around [`styleval_core`]: configuration, backend
//! clients, on-disk stores, the mock model farm, and the pipeline commands
//! behind the `styleval` binary.
//!
//! The split is deliberate: everything that touches the network, the
//! filesystem, or wall-clock time lives here, while the scoring and
//! statistics math stays in the core crate where it can be tested without
//! any of that machinery.

pub mod annotations;
pub mod backends;
pub mod commands;
pub mod config;
pub mod mockfarm;
pub mod stores;
