//! Command-line layer over `ergomv-core`: TOML experiment configs, replicated
//! runs on a worker pool, parameter sweeps, built-in checks and CSV/JSON output.

pub mod bench;
pub mod config;
pub mod error;
pub mod io;
pub mod run;
pub mod sweep;

use ergomv_core::experiment::Experiment;

pub use config::{parse_config, ConfigFile, ExperimentConfig, Reference};
pub use error::{CliError, CliResult};
pub use run::{run_experiment, RunOutput, Summary, CSV_HEADER};
pub use sweep::{run_sweep, SweepOutput};

pub(crate) fn experiment_of(cfg: &ExperimentConfig) -> Experiment {
    Experiment::new(cfg.model.clone(), cfg.plan, cfg.observable.clone())
        .with_seed(cfg.execution.seed)
        .with_burn_in(cfg.burn_in)
        .with_evaluation(cfg.evaluation)
        .with_antithetic(cfg.execution.antithetic)
}
