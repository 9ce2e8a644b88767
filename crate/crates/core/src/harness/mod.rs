//! Experiment harness: TOML configuration, runs over hyperparameter grids,
//! CSV/JSON output and SVG plots.

pub mod config;
pub mod experiment;
pub mod plot;

pub use config::{AlgorithmSpec, DataSource, ExperimentConfig, OptSettings};
pub use experiment::{run_experiment, run_on, AlgorithmRun, ExperimentResult, GridRun, Problem, RunOptions};
pub use plot::{emit_plot, load_series, render_svg, Series};
