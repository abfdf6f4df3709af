//! Config-driven experiment runs and their aggregation.

mod aggregate;
mod config;
mod runner;

pub use aggregate::{aggregate, aggregate_and_write, Aggregate, Compliance, HorizonAggregate, Summary};
pub use config::{allowed_bounds, AdversarialSection, ExperimentConfig, InstanceSource, Mode, Overrides};
pub use runner::{
    output_dir, run_experiment, solve_se, HorizonBounds, Manifest, RunEntry, RunOptions, SolveReport, AGGREGATE_FILE,
    MANIFEST_FILE,
};
