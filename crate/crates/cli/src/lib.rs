//! Experiment driver behind the `ducap` binary.

pub mod bench;
pub mod report;

pub use bench::{run_bench, run_sweep, BenchConfig, BenchRow, Sweep, SweepParam};
pub use report::{apply_settings, run_method, Method, RunReport, SolveSettings};
