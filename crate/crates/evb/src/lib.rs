//! Experience base for software-engineering evidence.
//!
//! Captures, validates, evaluates, and retrieves experience elements:
//! characterization vectors that scope where an element is valid, quality
//! models packaging GQM measurement results behind a single indicator, and
//! lessons learned as observations or problem/solution pairs. Elements are
//! interchanged in the textual `.evb` format and persisted one file per
//! element.
//!
//! With the default `parallel` feature, dataset aggregation and context
//! matching run data-parallel on rayon; disable it for a sequential build.

pub mod dsl;
pub mod measurement;
pub mod model;
pub mod report;
pub mod repository;
