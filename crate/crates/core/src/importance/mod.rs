//! Latent importance, attribution, inference, groups and the cross-fitted
//! pipeline.

pub mod attribute;
pub mod groups;
pub mod inference;
pub mod latent;
pub mod pipeline;

pub use attribute::{attribute, AttributedImportanceResult};
pub use groups::{group_importance, parse_groups, Group};
pub use inference::{infer, normal_sf, normal_upper_quantile, Inference, InferenceSettings};
pub use latent::{latent_importance, latent_importance_with, LatentImportanceResult, LatentOptions, Resampling};
pub use pipeline::{run_dfi, run_dfi_with, RunOptions};
