//! Pipeline stages, the benchmark harness and the filter service behind the
//! `splift` binary.

pub mod bench;
pub mod pipeline;
pub mod server;

pub use bench::{cmd_bench, trimmed_mean, BenchReport};
pub use pipeline::{cmd_analyze, cmd_extract, cmd_solve, cmd_ta2tsv, SolveOptions, Stage, StageError};
