//! Data handling, models and explainers for stability evaluation.
//!
//! Models and explainers are trait objects selected by name at runtime:
//! [`ModelRegistry`] maps `cart`/`forest`/`gbt` to trainers that produce
//! `Box<dyn Predictor>`, and [`ExplainerRegistry`] maps `shapley`/`surrogate`
//! to factories that produce `Box<dyn Explainer>`.

pub mod dataset;
pub mod error;
pub mod explainers;
pub mod models;
pub mod predictor;
pub mod preprocess;
pub mod smote;
pub mod split;
pub mod tree;

pub use dataset::{Cell, Dataset, FeatureKind, FeatureMeta, RawDataset};
pub use error::{ModelError, Result};
pub use explainers::{Explainer, ExplainerContext, ExplainerRegistry, ExplainerSpec};
pub use models::{ModelRegistry, ModelSpec, ModelTrainer};
pub use predictor::Predictor;
pub use preprocess::{fit_preprocessor, Preprocessor};
pub use smote::{smote, SmoteOutcome};
pub use split::stratified_split;
