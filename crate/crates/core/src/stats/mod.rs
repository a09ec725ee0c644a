//! Statistical validation and comparator metrics.

mod bootstrap;
mod correlation;
mod lipschitz;
mod wilcoxon;

pub use bootstrap::{bootstrap_ci, BootstrapCi};
pub use correlation::{average_ranks, pearson, spearman_rho};
pub use lipschitz::{
    lipschitz_estimate, lipschitz_lower_bound, lipschitz_score, prediction_stability, LipschitzMode,
};
pub use wilcoxon::{wilcoxon_signed_rank, TestMethod, WilcoxonResult, EXACT_MAX_N};
