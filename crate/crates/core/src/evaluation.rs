//! Deletion-based evaluation.
//!
//! Features are replaced in descending attribution order and the relative
//! drop of the explained class score is averaged over the steps (AOPC).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::explainers::{explain, ig_reference, Attribution, ExplainConfig, ExplainError, Method};
use crate::grid::{Grid, GridError};
use crate::models::{check_class, Capability, ModelError, QueryModel};
use crate::rng::{stream, Domain};

/// Scores below this magnitude make the relative drop meaningless.
pub const MIN_CONFIDENCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("explained score {0} is too close to zero to normalise by")]
    ZeroConfidence(f64),
    #[error("{steps} deletion steps of {per_step} features exceed {features} features")]
    BadLength {
        steps: usize,
        per_step: usize,
        features: usize,
    },
    #[error("budget list must be non-empty and strictly increasing: {0:?}")]
    BadBudgetList(Vec<usize>),
    #[error("at least one seed is required")]
    NoSeeds,
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Replacement {
    /// Deleted features take the baseline value.
    Baseline,
    /// Deleted features take a seeded `N(0, 1)` draw clipped to the model's
    /// input range.
    Gaussian,
}

impl std::fmt::Display for Replacement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Replacement::Baseline => "baseline",
            Replacement::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for Replacement {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Replacement::Baseline),
            "gaussian" => Ok(Replacement::Gaussian),
            other => Err(format!("unknown replacement '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeletionCurve {
    /// `ratios[i] = 1 - f(x^(i+1)) / f(x)`.
    pub ratios: Vec<f64>,
    pub l: usize,
    pub per_step: usize,
    pub replacement: Replacement,
    pub aopc: f64,
}

/// Flat indices by descending score; ties keep ascending index order.
pub fn deletion_order(scores: &Grid) -> Vec<usize> {
    let d = scores.data();
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    order
}

/// Replacement value of every feature. Gaussian draws are keyed by
/// `(seed, feature)`, so a feature keeps its value once deleted and the
/// values do not depend on the deletion order.
fn replacement_values(
    model: &dyn QueryModel,
    baseline: &Grid,
    replacement: Replacement,
    seed: u64,
) -> Vec<f64> {
    match replacement {
        Replacement::Baseline => baseline.data().to_vec(),
        Replacement::Gaussian => {
            let (lo, hi) = model.input_range();
            (0..baseline.len())
                .map(|p| {
                    let v: f64 = stream(seed, Domain::Replacement, p as u64).sample(StandardNormal);
                    v.clamp(lo, hi)
                })
                .collect()
        }
    }
}

/// Deletion curve from raw ranking scores. `l` steps each delete the next
/// `per_step` features; the input after step `i` has its top `i * per_step`
/// features replaced.
#[allow(clippy::too_many_arguments)]
pub fn deletion_curve_from_scores(
    model: &dyn QueryModel,
    x: &Grid,
    scores: &Grid,
    baseline: &Grid,
    class_idx: usize,
    l: usize,
    per_step: usize,
    replacement: Replacement,
    seed: u64,
) -> Result<DeletionCurve> {
    let features = x.len();
    if l == 0 || per_step == 0 || l.saturating_mul(per_step) > features {
        return Err(EvalError::BadLength {
            steps: l,
            per_step,
            features,
        });
    }
    x.same_shape(scores)?;
    x.same_shape(baseline)?;
    check_class(class_idx, model.num_classes())?;
    let fx = model.query(x)?[class_idx];
    if fx.abs() < MIN_CONFIDENCE {
        return Err(EvalError::ZeroConfidence(fx));
    }
    let order = deletion_order(scores);
    let values = replacement_values(model, baseline, replacement, seed);
    let mut current = x.data().to_vec();
    let mut ratios = Vec::with_capacity(l);
    for chunk in order.chunks(per_step).take(l) {
        for &p in chunk {
            current[p] = values[p];
        }
        ratios.push(1.0 - model.evaluate(&current)[class_idx] / fx);
    }
    let aopc = ratios.iter().sum::<f64>() / l as f64;
    Ok(DeletionCurve {
        ratios,
        l,
        per_step,
        replacement,
        aopc,
    })
}

/// Deletion curve of an attribution, one feature per step, replacing with
/// the attribution's own baseline and explaining its own class.
pub fn deletion_curve(
    model: &dyn QueryModel,
    x: &Grid,
    attribution: &Attribution,
    l: usize,
    replacement: Replacement,
    seed: u64,
) -> Result<DeletionCurve> {
    deletion_curve_from_scores(
        model,
        x,
        &attribution.xi,
        &attribution.baseline,
        attribution.class_idx,
        l,
        1,
        replacement,
        seed,
    )
}

/// Ranking scores that put the listed features first, in ascending index
/// order, and everything else after.
pub fn ground_truth_scores(shape: &[usize], relevant: &[usize]) -> Result<Grid> {
    let mut data = vec![0.0; shape.iter().product()];
    for &p in relevant {
        if let Some(v) = data.get_mut(p) {
            *v = 1.0;
        }
    }
    Ok(Grid::new(shape.to_vec(), data)?)
}

/// Brute-force oracle curve. Features are deleted tier by tier; within a
/// tier each step greedily deletes the feature whose replacement lowers the
/// class score most (lowest index on ties). Features in no tier form a
/// final tier. Costs `O(features^2)` queries.
#[allow(clippy::too_many_arguments)]
pub fn oracle_curve(
    model: &dyn QueryModel,
    x: &Grid,
    baseline: &Grid,
    class_idx: usize,
    tiers: &[Vec<usize>],
    l: usize,
    replacement: Replacement,
    seed: u64,
) -> Result<DeletionCurve> {
    let features = x.len();
    if l == 0 || l > features {
        return Err(EvalError::BadLength {
            steps: l,
            per_step: 1,
            features,
        });
    }
    x.same_shape(baseline)?;
    check_class(class_idx, model.num_classes())?;
    let fx = model.query(x)?[class_idx];
    if fx.abs() < MIN_CONFIDENCE {
        return Err(EvalError::ZeroConfidence(fx));
    }
    let mut seen = vec![false; features];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for tier in tiers {
        let fresh: Vec<usize> = tier
            .iter()
            .copied()
            .filter(|&p| p < features && !std::mem::replace(&mut seen[p], true))
            .collect();
        groups.push(fresh);
    }
    groups.push((0..features).filter(|&p| !seen[p]).collect());

    let values = replacement_values(model, baseline, replacement, seed);
    let mut current = x.data().to_vec();
    let mut ratios = Vec::with_capacity(l);
    'tiers: for mut remaining in groups {
        while !remaining.is_empty() {
            if ratios.len() == l {
                break 'tiers;
            }
            let scored: Vec<f64> = remaining
                .par_iter()
                .map(|&p| {
                    let mut probe = current.clone();
                    probe[p] = values[p];
                    model.evaluate(&probe)[class_idx]
                })
                .collect();
            let best = (0..remaining.len())
                .min_by(|&a, &b| {
                    scored[a]
                        .total_cmp(&scored[b])
                        .then(remaining[a].cmp(&remaining[b]))
                })
                .expect("non-empty tier");
            let p = remaining.swap_remove(best);
            current[p] = values[p];
            ratios.push(1.0 - scored[best] / fx);
        }
    }
    let aopc = ratios.iter().sum::<f64>() / l as f64;
    Ok(DeletionCurve {
        ratios,
        l,
        per_step: 1,
        replacement,
        aopc,
    })
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A model row of an AOPC table with the explicands it is evaluated on.
pub struct TableModel<'a> {
    pub name: String,
    pub model: &'a dyn QueryModel,
    pub inputs: Vec<Grid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub methods: Vec<Method>,
    pub replacements: Vec<Replacement>,
    pub seeds: Vec<u64>,
    /// Deletion steps; `None` deletes every feature.
    pub l: Option<usize>,
    pub per_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AopcCell {
    pub model: String,
    pub method: Method,
    pub replacement: Replacement,
    /// Per seed: AOPC averaged over the model's inputs.
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Set when any explanation or curve in the cell failed.
    pub error: Option<String>,
}

/// AOPC for every `(model, method, replacement)` cell, all methods sharing
/// one config and so one query budget. For each seed, the explanation and
/// the Gaussian replacement draws both use that seed. Cells are computed in
/// parallel and returned in row-major order; a failing cell records its
/// error and the others are unaffected.
pub fn aopc_table(
    models: &[TableModel<'_>],
    spec: &TableSpec,
    cfg: &ExplainConfig,
) -> Result<Vec<AopcCell>> {
    if spec.seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    let jobs: Vec<(&TableModel<'_>, Method, Replacement)> = models
        .iter()
        .flat_map(|m| {
            spec.methods
                .iter()
                .flat_map(move |&meth| spec.replacements.iter().map(move |&r| (m, meth, r)))
        })
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(m, method, replacement)| {
            let per_seed: Result<Vec<f64>> = spec
                .seeds
                .iter()
                .map(|&seed| {
                    let cfg = ExplainConfig {
                        seed,
                        ..cfg.clone()
                    };
                    let mut total = 0.0;
                    for x in &m.inputs {
                        let attr = explain(method, m.model, x, &cfg)?;
                        let l = spec.l.unwrap_or(x.len() / spec.per_step.max(1));
                        let curve = deletion_curve_from_scores(
                            m.model,
                            x,
                            &attr.xi,
                            &attr.baseline,
                            attr.class_idx,
                            l,
                            spec.per_step,
                            replacement,
                            seed,
                        )?;
                        total += curve.aopc;
                    }
                    Ok(total / m.inputs.len().max(1) as f64)
                })
                .collect();
            match per_seed {
                Ok(per_seed) => {
                    let (mean, std) = mean_std(&per_seed);
                    AopcCell {
                        model: m.name.clone(),
                        method,
                        replacement,
                        per_seed,
                        mean,
                        std,
                        error: None,
                    }
                }
                Err(e) => AopcCell {
                    model: m.name.clone(),
                    method,
                    replacement,
                    per_seed: Vec::new(),
                    mean: f64::NAN,
                    std: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Per budget, mean over seeds of `|xi - xi_ig| / |xi_ig|`.
    pub mean_rel_l2: Vec<f64>,
    pub std_rel_l2: Vec<f64>,
    /// Per budget, mean AOPC over seeds when requested.
    pub mean_aopc: Option<Vec<f64>>,
    /// AOPC of the integrated-gradients target when requested.
    pub ig_aopc: Option<f64>,
}

impl SweepResult {
    pub fn is_non_increasing(&self) -> bool {
        self.mean_rel_l2.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Deletion settings for the optional AOPC column of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAopc {
    pub l: usize,
    pub replacement: Replacement,
}

/// Distance of `geex_merged` to integrated gradients (`cfg.ig_steps`
/// steps) as the query budget grows.
pub fn convergence_sweep(
    model: &dyn QueryModel,
    x: &Grid,
    budgets: &[usize],
    cfg: &ExplainConfig,
    seeds: &[u64],
    aopc: Option<SweepAopc>,
) -> Result<SweepResult> {
    if budgets.is_empty() || budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::BadBudgetList(budgets.to_vec()));
    }
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    if model.capability() != Capability::WhiteBox {
        return Err(ModelError::NotWhiteBox.into());
    }
    cfg.validate()?;
    let baseline = cfg.baseline.resolve(x)?;
    let class = crate::explainers::resolve_class(model, x, cfg.class_idx)?;
    let ig = ig_reference(model, x, &baseline, cfg.ig_steps, class)?;
    let ig_norm = ig.xi.frobenius_norm();
    let ig_aopc = aopc
        .map(|a| deletion_curve(model, x, &ig, a.l, a.replacement, cfg.seed).map(|c| c.aopc))
        .transpose()?;

    let cfg = ExplainConfig {
        class_idx: Some(class),
        baseline: crate::explainers::BaselineKind::Custom(baseline),
        ..cfg.clone()
    };
    let mut mean_rel_l2 = Vec::with_capacity(budgets.len());
    let mut std_rel_l2 = Vec::with_capacity(budgets.len());
    let mut mean_aopc = Vec::with_capacity(budgets.len());
    for &n_star in budgets {
        let mut dists = Vec::with_capacity(seeds.len());
        let mut aopcs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let run = ExplainConfig {
                n_star,
                seed,
                ..cfg.clone()
            };
            let attr = explain(Method::GeexMerged, model, x, &run)?;
            dists.push(attr.xi.sub(&ig.xi)?.frobenius_norm() / ig_norm);
            if let Some(a) = aopc {
                aopcs.push(deletion_curve(model, x, &attr, a.l, a.replacement, seed)?.aopc);
            }
        }
        let (m, s) = mean_std(&dists);
        mean_rel_l2.push(m);
        std_rel_l2.push(s);
        if aopc.is_some() {
            mean_aopc.push(mean_std(&aopcs).0);
        }
    }
    Ok(SweepResult {
        budgets: budgets.to_vec(),
        seeds: seeds.to_vec(),
        mean_rel_l2,
        std_rel_l2,
        mean_aopc: aopc.map(|_| mean_aopc),
        ig_aopc,
    })
}
