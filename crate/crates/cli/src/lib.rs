//! Config-driven experiment runs over `apm-core`.
//!
//! [`parse_config`] loads an experiment file and its model; [`run_command`]
//! executes one of the `check`, `optimize`, `measure` or `report`
//! subcommands and writes `report.json` plus `tables/*.csv`.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, MeasureConfig, ScenarioConfig};
pub use run::{effective_seed, run_command, Command, Outcome, RunOptions, SeedChoice, SeedSource, EXIT_ASSUMPTION, EXIT_INTERNAL, EXIT_OK};
