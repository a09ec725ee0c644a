//! Stability scoring for feature-attribution explanations.
//!
//! An explanation `phi(x)` is compared against the explanations of `K`
//! noisy copies of `x`. Differences are weighted by the importance rank of
//! each feature in the original explanation, so churn among the top-ranked
//! features costs more than churn in the tail. The resulting score lives in
//! `[0, 1]`, with 1 meaning every neighbor reproduced the original
//! explanation exactly.
//!
//! The crate also carries the comparators used to validate the score:
//! a uniform-weight baseline, local Lipschitz estimates, prediction
//! stability, and the nonparametric statistics used to compare them.

pub mod attribution;
pub mod error;
pub mod perturbation;
pub mod rng;
pub mod stats;
pub mod summary;
pub mod weighting;

pub use attribution::{
    baseline_score, cies_score, rank_features, rank_weighted_distance, top_k_jaccard,
    uniform_distance, weighted_magnitude, AttributionVector, RankVector, StabilityComponents,
};
pub use error::{CiesError, Result};
pub use perturbation::{
    mean_perturbation_magnitude, neighborhood, perturb_instance, Instance, NeighborSet,
};
pub use summary::{aggregate_scores, ScoreSummary};
pub use weighting::{
    concentration_factor, resolve_weights, top_mass, RankWeighting, SchemeRegistry,
    WeightSchemeSpec, WeightVector,
};
