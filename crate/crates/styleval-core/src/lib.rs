//! Core building blocks for evaluating style-conditioned chat responses.
//!
//! Everything in this crate is pure computation over in-memory data: corpus
//! parsing and slicing, prompt templating, metric math (n-gram overlap,
//! embedding cosine, judge score extraction, token-NLL appropriateness),
//! rank statistics, and leaderboard assembly. IO, backends, and the CLI live
//! in the companion `styleval` crate.
//!
//! The crate is `no_std`-compatible (it needs `alloc`). The default `std`
//! feature only forwards std support to dependencies for downstream
//! ergonomics; no code path changes.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod corpus;
pub mod logprob;
pub mod metrics;
pub mod prompting;
pub mod report;
pub mod stats;
pub mod style;

mod fmath;
