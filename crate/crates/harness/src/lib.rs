//! Experiment driver for the swarm solvers: configuration and presets,
//! result bundles, comparisons against a reference run, figures and
//! timing tables. The `swarm` binary wraps these as subcommands.

pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod records;
pub mod report;
pub mod run;
pub mod state;

pub use compare::{compare_runs, MetricsReport, RunData};
pub use config::{ExperimentConfig, LevelKind, Preset};
pub use error::HarnessError;
pub use run::{run_experiment, Manifest, RunOptions, RunStatus};
