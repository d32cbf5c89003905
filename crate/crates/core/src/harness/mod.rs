//! Configuration, Monte Carlo orchestration and file output.

pub mod config;
pub mod csv;
pub mod run;
pub mod svg;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Initializer, SEED_ENV};
pub use csv::{read_state_bundle, write_kernel_surface, write_outputs, write_state_bundle};
pub use run::{
    effective_truncation, kernel_surface, replication_rng, run_experiment, run_replication,
    stream_seed, ExperimentOutput, Prepared,
};
