//! Config-driven experiment runs.
//!
//! A JSON [`ExperimentConfig`] fully determines a run. Chain `m` draws from
//! `RngStream::new(seed, m)`, so output is identical for any thread count.

mod config;
mod io;
mod run;

pub use config::{
    parse_config, parse_config_str, Diagnostic, ExperimentConfig, SamplerConfig,
    SyntheticDesign, TargetConfig, TuningConfig, TvSettings,
};
pub use io::{format_float, read_draws_csv, write_draws_csv};
pub use run::{
    build_target, run_diagnostic, run_experiment, run_tuning, sample_chains, Overrides,
    RunSummary, TuningReport,
};
