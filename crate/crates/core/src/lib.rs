//! Query-only path-integrated attributions.
//!
//! The crate estimates gradients of a black-box scalar model from random
//! queries, integrates those estimates along a straight path from a
//! baseline to the explicand, and evaluates the resulting attribution maps
//! by deletion. White-box references (integrated gradients, SmoothGrad) and
//! a random reference are included for comparison.

pub mod evaluation;
pub mod explainers;
pub mod grid;
pub mod models;
mod rng;
pub mod sampling;

pub use evaluation::{
    aopc_table, convergence_sweep, deletion_curve, DeletionCurve, EvalError, Replacement,
    SweepResult,
};
pub use explainers::{
    explain, ge_estimate, geex_interpolated, geex_merged, geex_merged_with_masks, ig_reference,
    random_reference, smoothgrad_reference, Attribution, BaselineKind, ExplainConfig, ExplainError,
    Method,
};
pub use grid::{Grid, GridError, Kernel};
pub use models::{AnalyticModel, Capability, DenseNet, ModelError, OutputKind, QueryModel};
pub use sampling::{
    generate_mask_set, sample_count_stats, AlphaMode, MaskSet, MaskStats, SamplingError,
    SearchDistribution,
};
