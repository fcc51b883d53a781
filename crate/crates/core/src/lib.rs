//! Searching personal digital traces along six dimensions: what, who, when,
//! where, why and how.
//!
//! The pipeline is ingest -> resolve -> index -> search, with an evaluation
//! harness and a synthetic corpus generator on the side.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod freq;
pub mod ingest;
pub mod model;
pub mod persist;
pub mod resolve;
pub mod search;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use model::{DimensionTag, LocationRef, PersonRef, Query, TimePoint, TraceObject};
pub use search::{Scorer, ScoredResult, SearchIndex};
