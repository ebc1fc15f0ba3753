//! Command-line pipeline around `ecoplex-core`: trade CSV ingestion,
//! score and co-cluster artifacts, counterfactual runs and benchmarks.
//!
//! ```text
//! ecoplex ingest    --input trade.csv --year 2000 --out run
//! ecoplex scores    --input run --out run --verify
//! ecoplex cocluster --input run --out run
//! ecoplex simulate greedy --input run --out run --country C07
//! ```

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod format;
pub mod io;

pub use error::{CliError, CliResult};
