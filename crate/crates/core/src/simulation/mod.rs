//! Benchmark models, their population targets, and Monte Carlo studies.

mod models;
mod study;

pub use models::{feature_names, generate, theoretical_values, Model, ModelSpec, TheoreticalValues};
pub use study::{
    coverage_study, replication_study, replication_study_with, BaselineSummary, FeatureSummary, ReplicateRecord,
    StudyOptions, StudyResult,
};
