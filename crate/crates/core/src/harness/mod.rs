//! Brute-force oracle and benchmark runner.

pub mod bench;
pub mod oracle;

pub use bench::{bench_run, Algorithm, BenchConfig, BenchReport, Profile};
pub use oracle::{brute_force_opt, OracleResult, DEFAULT_BUDGET};
