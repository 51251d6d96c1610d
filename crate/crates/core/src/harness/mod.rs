//! Experiment plumbing: configuration, reference solutions, trace files and
//! the complexity-bound report.

pub mod bound;
pub mod config;
pub mod experiment;
pub mod reference;

pub use bound::{bound_report, BoundReport};
pub use config::{ExperimentConfig, MethodKind, Problem, ProblemKind};
pub use experiment::{run_experiment, run_single, write_trace, CSV_HEADER};
pub use reference::{load_reference, reference_solution, save_reference, ReferenceSolution};
