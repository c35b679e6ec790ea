//! Driver support: task corpora and the benchmark harness behind `coopv bench`.

pub mod bench;
pub mod corpus;

pub use bench::{BenchResult, BenchRow, RunSpec, SummaryRow};
pub use corpus::{CorpusEntry, Manifest};
