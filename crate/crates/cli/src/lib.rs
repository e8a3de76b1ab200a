//! Benchmark driver for the modal sensitivity engines: builds plates, times
//! engines, compares them and writes CSV or JSON reports.

pub mod bench;
pub mod config;
pub mod report;

pub use bench::{run, verify, VerifyReport};
pub use config::{RunConfig, SweepConfig};
pub use report::{emit, BenchReport};
