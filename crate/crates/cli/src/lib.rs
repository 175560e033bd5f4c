//! Experiment drivers behind the `mhinr` command-line tool.
//!
//! Each `cmd_*` function runs one subcommand end to end and writes its
//! artifacts (CSV tables, reconstructions, SVG plots, checkpoints) into the
//! configured output directory. CSV outputs are deterministic for a fixed
//! seed; wall-clock timings only go to JSON reports and the log.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::{CliError, Result};
pub use experiments::{cmd_compare, cmd_fit, cmd_perlin, cmd_sweep_heads, cmd_sweep_octaves};
pub use report::RunReport;
