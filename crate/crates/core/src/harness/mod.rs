//! Experiment configs, seeded runs with CSV output, and the replication
//! checks.

pub mod config;
pub mod criteria;
pub mod run;
pub mod suites;

pub use config::{AnswerMechanism, ExperimentConfig, ExperimentKind, CONFIG_HEADER};
pub use criteria::{all_criteria, Verdict};
pub use run::{run_experiment, Attachment, RunRecord};
pub use suites::{replicate_suite, DEFAULT_BASE_SEED, SUITES};
