//! Experiment configuration, deterministic sweeps and result files.

pub mod config;
pub mod output;
pub mod rng;
pub mod sweep;

pub use config::{parse_config, validate_config, ConfigErrors, ExperimentKind, OutputFormat, SweepConfig};
pub use output::{render, write_results, Cell, ResultRow};
pub use sweep::{benchmark_pair, run_sweep, BenchmarkPoint, CurvePoint};
