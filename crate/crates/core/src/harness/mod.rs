//! Experiment harness: benchmark scheme synthesizers, plan/scenario file
//! parsing, the Monte Carlo experiment engine with deterministic seed
//! splitting, CSV emission, and the built-in validation checklist.

pub mod checks;
pub mod experiment;
pub mod plan;
pub mod scheme;

pub use experiment::{run_experiment, ExperimentResult, ResultRow};
pub use plan::{ExperimentPlan, SweepParam};
pub use scheme::{BenchmarkGeometry, SchemeId};
