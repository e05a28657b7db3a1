//! Attribution methods.
//!
//! Query-only: [`ge_estimate`], [`geex_interpolated`], [`geex_merged`].
//! White-box references: [`ig_reference`], [`smoothgrad_reference`].
//! Ordering-only reference: [`random_reference`].
//!
//! Every method is a pure function of `(model, explicand, config)`. Queries
//! may be spread over a worker pool, but all reductions run in a fixed index
//! order, so the result is bit-identical for any worker count.

mod geex;
mod reference;

pub use geex::{ge_estimate, geex_interpolated, geex_merged, geex_merged_with_masks};
pub use reference::{ig_reference, random_reference, smoothgrad_reference};

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Grid, GridError, Kernel};
use crate::models::{argmax, ModelError, OutputKind, QueryModel};
use crate::sampling::{AlphaMode, SamplingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplainError {
    #[error("query budget {0} is too small")]
    BudgetTooSmall(usize),
    #[error("query budget {n_star} is not divisible by {s_steps} path steps")]
    BudgetNotDivisible { n_star: usize, s_steps: usize },
    #[error("path step count must be at least 1")]
    NoSteps,
    #[error("search sigma {0} must be positive and finite")]
    BadSigma(f64),
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("baseline shape {baseline:?} does not match explicand shape {explicand:?}")]
    BaselineShape {
        baseline: Vec<usize>,
        explicand: Vec<usize>,
    },
    #[error("mask set does not fit this explicand: {0}")]
    MaskMismatch(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, ExplainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GeexMerged,
    GeexInterpolated,
    Ge,
    Ig,
    SmoothGrad,
    Random,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GeexMerged,
        Method::GeexInterpolated,
        Method::Ge,
        Method::Ig,
        Method::SmoothGrad,
        Method::Random,
    ];

    /// Whether the method integrates along the baseline-to-explicand path
    /// and therefore reports a completeness residual.
    pub fn is_path_method(self) -> bool {
        matches!(
            self,
            Method::GeexMerged | Method::GeexInterpolated | Method::Ig
        )
    }

    pub fn needs_white_box(self) -> bool {
        matches!(self, Method::Ig | Method::SmoothGrad)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::GeexMerged => "geex",
            Method::GeexInterpolated => "geex-interp",
            Method::Ge => "ge",
            Method::Ig => "ig",
            Method::SmoothGrad => "smoothgrad",
            Method::Random => "random",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineKind {
    Zeros,
    /// The explicand blurred with a unit-sum Gaussian kernel.
    Blurred {
        size: usize,
        sigma: f64,
    },
    Custom(Grid),
}

impl BaselineKind {
    pub const DEFAULT_BLUR: BaselineKind = BaselineKind::Blurred {
        size: 5,
        sigma: 1.0,
    };

    pub fn resolve(&self, explicand: &Grid) -> Result<Grid> {
        match self {
            BaselineKind::Zeros => Ok(Grid::zeros(explicand.shape())?),
            BaselineKind::Blurred { size, sigma } => Ok(explicand.gaussian_blur(*size, *sigma)?),
            BaselineKind::Custom(g) => {
                if g.shape() != explicand.shape() {
                    return Err(ExplainError::BaselineShape {
                        baseline: g.shape().to_vec(),
                        explicand: explicand.shape().to_vec(),
                    });
                }
                Ok(g.clone())
            }
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaselineKind::Zeros => f.write_str("zeros"),
            BaselineKind::Blurred { size, sigma } => write!(f, "blur:{size}:{sigma}"),
            BaselineKind::Custom(_) => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    pub sigma: f64,
    /// Total number of model queries for the sampling-based methods.
    pub n_star: usize,
    /// Path steps of the interpolated variant; `n_star` must divide evenly.
    pub s_steps: usize,
    pub mirrored: bool,
    pub smoothing: Option<Kernel>,
    pub baseline: BaselineKind,
    pub alpha_mode: AlphaMode,
    pub seed: u64,
    /// `None` selects the top class at the explicand.
    pub class_idx: Option<usize>,
    /// Interpolated variant only: draw a distinct slice of masks per step
    /// instead of reusing one slice at every step.
    pub fresh_masks_per_step: bool,
    /// Riemann steps of the integrated-gradients reference.
    pub ig_steps: usize,
    /// `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            n_star: 5000,
            s_steps: 5,
            mirrored: true,
            smoothing: None,
            baseline: BaselineKind::Zeros,
            alpha_mode: AlphaMode::Stratified,
            seed: 0,
            class_idx: None,
            fresh_masks_per_step: false,
            ig_steps: 512,
            workers: None,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ExplainError::BadSigma(self.sigma));
        }
        if self.n_star < 2 {
            return Err(ExplainError::BudgetTooSmall(self.n_star));
        }
        if self.s_steps == 0 || self.ig_steps == 0 {
            return Err(ExplainError::NoSteps);
        }
        if self.workers == Some(0) {
            return Err(ExplainError::NoWorkers);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub xi: Grid,
    pub baseline: Grid,
    pub class_idx: usize,
    /// Model evaluations spent on the estimate (gradient calls for the
    /// white-box references). The two evaluations behind the completeness
    /// residual are not counted.
    pub n_queries: usize,
    /// `(f(x) - f(baseline)) - sum(xi)`; path methods only.
    pub completeness_residual: Option<f64>,
    pub method: Method,
    pub seed: u64,
    pub output_kind: OutputKind,
    pub warnings: Vec<String>,
}

impl Attribution {
    pub fn total(&self) -> f64 {
        self.xi.sum()
    }
}

/// Runs `method` with the parameters it takes from `cfg`.
///
/// SmoothGrad uses `n_star` samples of noise `sigma`; integrated gradients
/// uses `ig_steps`. The random reference borrows the resolved baseline and
/// class so that it can be evaluated like any other attribution.
pub fn explain(
    method: Method,
    model: &dyn QueryModel,
    x: &Grid,
    cfg: &ExplainConfig,
) -> Result<Attribution> {
    match method {
        Method::GeexMerged => geex_merged(model, x, cfg),
        Method::GeexInterpolated => geex_interpolated(model, x, cfg),
        Method::Ge => ge_estimate(model, x, cfg),
        Method::Ig => {
            cfg.validate()?;
            let baseline = cfg.baseline.resolve(x)?;
            let class = resolve_class(model, x, cfg.class_idx)?;
            ig_reference(model, x, &baseline, cfg.ig_steps, class)
        }
        Method::SmoothGrad => {
            cfg.validate()?;
            let class = resolve_class(model, x, cfg.class_idx)?;
            smoothgrad_reference(
                model,
                x,
                cfg.n_star,
                cfg.sigma,
                cfg.mirrored,
                cfg.seed,
                class,
            )
        }
        Method::Random => {
            cfg.validate()?;
            let mut attr = random_reference(x.shape(), cfg.seed)?;
            attr.baseline = cfg.baseline.resolve(x)?;
            attr.class_idx = resolve_class(model, x, cfg.class_idx)?;
            attr.output_kind = model.output_kind();
            Ok(attr)
        }
    }
}

pub(crate) fn resolve_class(
    model: &dyn QueryModel,
    x: &Grid,
    class_idx: Option<usize>,
) -> Result<usize> {
    let scores = model.query(x)?;
    match class_idx {
        Some(c) if c >= scores.len() => Err(ModelError::BadClass {
            class: c,
            num_classes: scores.len(),
        }
        .into()),
        Some(c) => Ok(c),
        None => Ok(argmax(&scores)),
    }
}

/// Evaluates `job(i)` for `i in 0..n`, in parallel unless `workers` is 1.
/// Output order is index order regardless of scheduling.
pub(crate) fn fan_out<T, F>(workers: Option<usize>, n: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        Some(0) => Err(ExplainError::NoWorkers),
        Some(1) => Ok((0..n).map(job).collect()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| ExplainError::Pool(e.to_string()))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(&job).collect()))
        }
        None => Ok((0..n).into_par_iter().map(job).collect()),
    }
}

/// `xi_l = (x_l - b_l) * s_l / denom`, with an exact `+0.0` wherever the
/// explicand equals the baseline.
pub(crate) fn path_scale(x: &Grid, baseline: &Grid, summed: &[f64], denom: f64) -> Grid {
    let xi = x
        .data()
        .iter()
        .zip(baseline.data())
        .zip(summed)
        .map(|((&xv, &bv), &s)| if xv == bv { 0.0 } else { (xv - bv) * s / denom })
        .collect();
    Grid::from_parts(x.shape().to_vec(), xi)
}

pub(crate) fn completeness(
    model: &dyn QueryModel,
    x: &Grid,
    baseline: &Grid,
    class: usize,
    xi: &Grid,
) -> f64 {
    let fx = model.evaluate(x.data())[class];
    let fb = model.evaluate(baseline.data())[class];
    (fx - fb) - xi.sum()
}
