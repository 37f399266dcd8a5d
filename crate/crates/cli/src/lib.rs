//! Configuration, scenario presets and experiment orchestration behind the
//! `dnsde` binary.

pub mod config;
pub mod experiments;
pub mod presets;

pub use config::{parse_config, parse_str, ConfigError, ExperimentConfig};
pub use experiments::{run, Experiment, Outcome, RunError, Verdict};
