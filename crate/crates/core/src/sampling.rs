//! Search-distribution machinery.
//!
//! The search distribution is an isotropic Gaussian location family, so a
//! set of zero-centred masks can be drawn once and shifted onto any point of
//! any path. Each [`MaskSet`] also stores the score (log-density gradient)
//! of every mask and the path position `alpha` it is paired with.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Grid, GridError, Kernel};
use crate::rng::{stream, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("mask budget {0} must be at least 2")]
    BadBudget(usize),
    #[error("mirrored sampling needs an even budget, got {0}")]
    OddWithMirror(usize),
    #[error("search sigma {0} must be positive and finite")]
    BadSigma(f64),
    #[error("mask set is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, SamplingError>;

/// Isotropic Gaussian `N(x, sigma^2 I)` over grids of `dim_shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDistribution {
    sigma: f64,
    dim_shape: Vec<usize>,
}

impl SearchDistribution {
    pub fn new(sigma: f64, dim_shape: &[usize]) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SamplingError::BadSigma(sigma));
        }
        Grid::zeros(dim_shape)?;
        Ok(Self {
            sigma,
            dim_shape: dim_shape.to_vec(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim_shape(&self) -> &[usize] {
        &self.dim_shape
    }

    /// Score of the location family at offset `eps`: `eps / sigma^2`.
    pub fn score_gradient(&self, eps: &Grid) -> Result<Grid> {
        if eps.shape() != self.dim_shape.as_slice() {
            return Err(GridError::ShapeMismatch {
                left: self.dim_shape.clone(),
                right: eps.shape().to_vec(),
            }
            .into());
        }
        Ok(eps.scale(1.0 / (self.sigma * self.sigma))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaMode {
    /// `alpha ~ U[0, 1]` independently per mask group.
    IidUniform,
    /// One uniform draw inside each of `groups` equal strata of `[0, 1]`.
    #[default]
    Stratified,
}

impl std::fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AlphaMode::IidUniform => "iid",
            AlphaMode::Stratified => "stratified",
        })
    }
}

impl std::str::FromStr for AlphaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "iid" | "iid_uniform" => Ok(AlphaMode::IidUniform),
            "stratified" => Ok(AlphaMode::Stratified),
            other => Err(format!("unknown alpha mode '{other}'")),
        }
    }
}

/// Pre-generated noise masks with their scores and path positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    dist: SearchDistribution,
    masks: Vec<Grid>,
    scores: Vec<Grid>,
    alphas: Vec<f64>,
    seed: u64,
    mirrored: bool,
    smoothing: Option<Kernel>,
    alpha_mode: AlphaMode,
}

fn draw_mask(dist: &SearchDistribution, seed: u64, group: u64) -> Vec<f64> {
    let mut rng = stream(seed, Domain::Mask, group);
    let n: usize = dist.dim_shape.iter().product();
    (0..n)
        .map(|_| dist.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn draw_alpha(mode: AlphaMode, seed: u64, group: u64, groups: usize) -> f64 {
    let u: f64 = stream(seed, Domain::Alpha, group).random();
    match mode {
        AlphaMode::IidUniform => u,
        AlphaMode::Stratified => (group as f64 + u) / groups as f64,
    }
}

/// Draws `n_star` masks from `dist`.
///
/// Group `k` (a single mask, or a mirrored pair) is derived only from
/// `(seed, k)`. With `smoothing`, each raw mask is convolved with the unit
/// Frobenius-norm kernel before its score is computed, so scores always
/// describe the perturbation actually applied.
pub fn generate_mask_set(
    dist: &SearchDistribution,
    n_star: usize,
    seed: u64,
    mirrored: bool,
    smoothing: Option<Kernel>,
    alpha_mode: AlphaMode,
) -> Result<MaskSet> {
    if n_star < 2 {
        return Err(SamplingError::BadBudget(n_star));
    }
    if mirrored && !n_star.is_multiple_of(2) {
        return Err(SamplingError::OddWithMirror(n_star));
    }
    if smoothing.is_some() && dist.dim_shape.len() != 2 {
        return Err(GridError::NotTwoDimensional(dist.dim_shape.clone()).into());
    }
    let per_group = if mirrored { 2 } else { 1 };
    let groups = n_star / per_group;

    let drawn: Vec<(Grid, f64)> = (0..groups as u64)
        .into_par_iter()
        .map(|k| {
            let raw = Grid::from_parts(dist.dim_shape.clone(), draw_mask(dist, seed, k));
            let mask = match &smoothing {
                Some(kernel) => raw.convolve_same(kernel)?,
                None => raw,
            };
            Ok((mask, draw_alpha(alpha_mode, seed, k, groups)))
        })
        .collect::<Result<_>>()?;

    let mut masks = Vec::with_capacity(n_star);
    let mut alphas = Vec::with_capacity(n_star);
    for (mask, alpha) in drawn {
        if mirrored {
            let neg = mask.scale(-1.0)?;
            masks.push(mask);
            masks.push(neg);
            alphas.extend([alpha, alpha]);
        } else {
            masks.push(mask);
            alphas.push(alpha);
        }
    }
    let scores = masks
        .iter()
        .map(|m| dist.score_gradient(m))
        .collect::<Result<_>>()?;
    Ok(MaskSet {
        dist: dist.clone(),
        masks,
        scores,
        alphas,
        seed,
        mirrored,
        smoothing,
        alpha_mode,
    })
}

impl MaskSet {
    /// Rebuilds a set from stored masks and alphas, recomputing the scores.
    pub fn from_masks(
        dist: SearchDistribution,
        masks: Vec<Grid>,
        alphas: Vec<f64>,
        seed: u64,
        mirrored: bool,
        smoothing: Option<Kernel>,
        alpha_mode: AlphaMode,
    ) -> Result<MaskSet> {
        let n = masks.len();
        if n < 2 {
            return Err(SamplingError::BadBudget(n));
        }
        if alphas.len() != n {
            return Err(SamplingError::Inconsistent(format!(
                "{n} masks but {} alphas",
                alphas.len()
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(GridError::AlphaOutOfRange(*a).into());
        }
        if mirrored {
            if !n.is_multiple_of(2) {
                return Err(SamplingError::OddWithMirror(n));
            }
            for (k, pair) in masks.chunks(2).enumerate() {
                let paired = pair[0]
                    .data()
                    .iter()
                    .zip(pair[1].data())
                    .all(|(a, b)| *b == -*a);
                if !paired || alphas[2 * k] != alphas[2 * k + 1] {
                    return Err(SamplingError::Inconsistent(format!(
                        "mirror pair {k} is not antithetic"
                    )));
                }
            }
        }
        let scores = masks
            .iter()
            .map(|m| dist.score_gradient(m))
            .collect::<Result<_>>()?;
        Ok(MaskSet {
            dist,
            masks,
            scores,
            alphas,
            seed,
            mirrored,
            smoothing,
            alpha_mode,
        })
    }

    pub fn distribution(&self) -> &SearchDistribution {
        &self.dist
    }

    pub fn sigma(&self) -> f64 {
        self.dist.sigma
    }

    pub fn shape(&self) -> &[usize] {
        &self.dist.dim_shape
    }

    pub fn masks(&self) -> &[Grid] {
        &self.masks
    }

    pub fn scores(&self) -> &[Grid] {
        &self.scores
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn smoothing(&self) -> Option<&Kernel> {
        self.smoothing.as_ref()
    }

    pub fn alpha_mode(&self) -> AlphaMode {
        self.alpha_mode
    }

    /// Masks per reduction group: 2 for mirrored sets, 1 otherwise.
    pub fn group_size(&self) -> usize {
        if self.mirrored {
            2
        } else {
            1
        }
    }

    /// Element-wise sum of all masks, reduced pair-first for mirrored sets
    /// so that antithetic pairs cancel exactly.
    pub fn sum(&self) -> Grid {
        let mut acc = vec![0.0; self.masks[0].len()];
        for group in self.masks.chunks(self.group_size()) {
            for (i, a) in acc.iter_mut().enumerate() {
                let part: f64 = group.iter().map(|m| m.data()[i]).sum();
                *a += part;
            }
        }
        Grid::from_parts(self.dist.dim_shape.clone(), acc)
    }
}

/// Per-coordinate mean and (population) standard deviation of a mask set.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskStats {
    pub mean: Grid,
    pub std: Grid,
}

pub fn sample_count_stats(set: &MaskSet) -> MaskStats {
    let n = set.len() as f64;
    let mean = set.sum().scale(1.0 / n).expect("mean of finite masks");
    let mut var = vec![0.0; mean.len()];
    for m in set.masks() {
        for ((v, x), mu) in var.iter_mut().zip(m.data()).zip(mean.data()) {
            *v += (x - mu) * (x - mu);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    MaskStats {
        std: Grid::from_parts(mean.shape().to_vec(), std),
        mean,
    }
}
