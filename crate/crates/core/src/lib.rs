//! Grey-box, coverage-guided fuzzing for tools that consume Verilog.
//!
//! The pipeline: seeds are mutated either structurally ([`grammar`]) or at
//! the byte level ([`mutator`]), executed under supervision ([`executor`]),
//! and admitted to the corpus when they reach new edge-coverage buckets
//! ([`coverage`]). Crashes are deduplicated, classified, minimized and put
//! through a two-factor exploitability test ([`triage`]); [`campaign`] drives
//! the loop and [`report`] turns its output into tables and plots.

pub mod campaign;
pub mod config;
pub mod coverage;
pub mod executor;
pub mod grammar;
pub mod mutator;
pub mod report;
pub mod rng;
pub mod testbed;
pub mod triage;
