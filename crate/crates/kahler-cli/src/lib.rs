//! Experiment orchestration, expansion fitting and the verification suite
//! behind the `kahler` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod output;
pub mod suite;

pub use config::{ExperimentConfig, ExperimentKind, ToleranceProfile};
pub use error::{CliError, Result};
pub use experiments::run_experiment;
pub use fit::{fit_expansion, FitResult};
pub use output::RunManifest;
pub use suite::{verify_suite, Check, Report, Status};
