use super::{
    completeness, fan_out, path_scale, resolve_class, Attribution, ExplainConfig, ExplainError,
    Method, Result,
};
use crate::grid::{lerp, Grid};
use crate::models::QueryModel;
use crate::sampling::{generate_mask_set, MaskSet, SamplingError, SearchDistribution};

/// Adds `sum_i values[i] * scores[i]` into `acc`, one reduction group at a
/// time so that mirrored pairs cancel before they touch the accumulator.
fn accumulate(acc: &mut [f64], values: &[f64], scores: &[Grid], group: usize) {
    for (vals, scs) in values.chunks(group).zip(scores.chunks(group)) {
        for (l, a) in acc.iter_mut().enumerate() {
            let part: f64 = vals.iter().zip(scs).map(|(v, s)| v * s.data()[l]).sum();
            *a += part;
        }
    }
}

fn mask_set_for(x: &Grid, cfg: &ExplainConfig, n: usize) -> Result<MaskSet> {
    let dist = SearchDistribution::new(cfg.sigma, x.shape())?;
    Ok(generate_mask_set(
        &dist,
        n,
        cfg.seed,
        cfg.mirrored,
        cfg.smoothing.clone(),
        cfg.alpha_mode,
    )?)
}

fn zero_attribution(
    model: &dyn QueryModel,
    x: &Grid,
    baseline: Grid,
    class_idx: usize,
    method: Method,
    seed: u64,
) -> Result<Attribution> {
    Ok(Attribution {
        xi: Grid::zeros(x.shape())?,
        baseline,
        class_idx,
        n_queries: 0,
        completeness_residual: Some(0.0),
        method,
        seed,
        output_kind: model.output_kind(),
        warnings: Vec::new(),
    })
}

/// Plain Monte Carlo gradient estimate at `x`:
/// `xi = (1/n) sum_i f(x + eps_i) * eps_i / sigma^2`.
///
/// Estimates the gradient of the Gaussian-smoothed model, not an
/// attribution relative to a baseline; the path positions of the mask set
/// and `s_steps` are unused.
pub fn ge_estimate(model: &dyn QueryModel, x: &Grid, cfg: &ExplainConfig) -> Result<Attribution> {
    cfg.validate()?;
    let class = resolve_class(model, x, cfg.class_idx)?;
    let baseline = cfg.baseline.resolve(x)?;
    let masks = mask_set_for(x, cfg, cfg.n_star)?;
    let values = fan_out(cfg.workers, masks.len(), |i| {
        let z: Vec<f64> = x
            .data()
            .iter()
            .zip(masks.masks()[i].data())
            .map(|(xv, e)| xv + e)
            .collect();
        model.evaluate(&z)[class]
    })?;
    let mut acc = vec![0.0; x.len()];
    accumulate(&mut acc, &values, masks.scores(), masks.group_size());
    let n = masks.len() as f64;
    let xi = Grid::new(x.shape().to_vec(), acc.into_iter().map(|s| s / n).collect())?;
    Ok(Attribution {
        xi,
        baseline,
        class_idx: class,
        n_queries: masks.len(),
        completeness_residual: None,
        method: Method::Ge,
        seed: cfg.seed,
        output_kind: model.output_kind(),
        warnings: vec!["ge ignores the baseline and s_steps".into()],
    })
}

/// Two-level estimate: `s_steps` path points `x(j/s)`, `n = n_star/s_steps`
/// masks per point, `xi = ((x - b) / n_star) * sum_j sum_i f(x(j/s) + eps_i) score_i`.
///
/// By default the same `n` masks are reused at every point. With
/// `fresh_masks_per_step`, point `j` uses slice `j` of an `n_star` set.
pub fn geex_interpolated(
    model: &dyn QueryModel,
    x: &Grid,
    cfg: &ExplainConfig,
) -> Result<Attribution> {
    cfg.validate()?;
    let s = cfg.s_steps;
    if !cfg.n_star.is_multiple_of(s) {
        return Err(ExplainError::BudgetNotDivisible {
            n_star: cfg.n_star,
            s_steps: s,
        });
    }
    let n = cfg.n_star / s;
    if n < 2 {
        return Err(ExplainError::BudgetTooSmall(n));
    }
    if cfg.mirrored && !n.is_multiple_of(2) {
        return Err(SamplingError::OddWithMirror(n).into());
    }
    let class = resolve_class(model, x, cfg.class_idx)?;
    let baseline = cfg.baseline.resolve(x)?;
    if x == &baseline {
        return zero_attribution(
            model,
            x,
            baseline,
            class,
            Method::GeexInterpolated,
            cfg.seed,
        );
    }
    let fresh = cfg.fresh_masks_per_step;
    let masks = mask_set_for(x, cfg, if fresh { cfg.n_star } else { n })?;

    let values = fan_out(cfg.workers, cfg.n_star, |q| {
        let alpha = (q / n + 1) as f64 / s as f64;
        let mask = &masks.masks()[if fresh { q } else { q % n }];
        let z: Vec<f64> = baseline
            .data()
            .iter()
            .zip(x.data())
            .zip(mask.data())
            .map(|((&b, &xv), &e)| lerp(b, xv, alpha) + e)
            .collect();
        model.evaluate(&z)[class]
    })?;

    let mut acc = vec![0.0; x.len()];
    for (j, step_values) in values.chunks(n).enumerate() {
        let scores = if fresh {
            &masks.scores()[j * n..(j + 1) * n]
        } else {
            masks.scores()
        };
        accumulate(&mut acc, step_values, scores, masks.group_size());
    }
    let xi = path_scale(x, &baseline, &acc, cfg.n_star as f64);
    let residual = completeness(model, x, &baseline, class, &xi);
    Ok(Attribution {
        xi,
        baseline,
        class_idx: class,
        n_queries: cfg.n_star,
        completeness_residual: Some(residual),
        method: Method::GeexInterpolated,
        seed: cfg.seed,
        output_kind: model.output_kind(),
        warnings: Vec::new(),
    })
}

/// One-sample estimates spread densely along the path:
/// `xi = ((x - b) / n_star) * sum_i f(x(alpha_i) + eps_i) score_i`.
pub fn geex_merged(model: &dyn QueryModel, x: &Grid, cfg: &ExplainConfig) -> Result<Attribution> {
    cfg.validate()?;
    let class = resolve_class(model, x, cfg.class_idx)?;
    let baseline = cfg.baseline.resolve(x)?;
    if x == &baseline {
        return zero_attribution(model, x, baseline, class, Method::GeexMerged, cfg.seed);
    }
    let masks = mask_set_for(x, cfg, cfg.n_star)?;
    merged_core(model, x, baseline, class, &masks, cfg.workers)
}

/// [`geex_merged`] with a caller-supplied mask set, which fixes the noise,
/// the path positions, the budget and the seed. Baseline, class and
/// worker count still come from `cfg`.
pub fn geex_merged_with_masks(
    model: &dyn QueryModel,
    x: &Grid,
    cfg: &ExplainConfig,
    masks: &MaskSet,
) -> Result<Attribution> {
    if masks.shape() != x.shape() {
        return Err(ExplainError::MaskMismatch(format!(
            "masks have shape {:?}, explicand {:?}",
            masks.shape(),
            x.shape()
        )));
    }
    if cfg.workers == Some(0) {
        return Err(ExplainError::NoWorkers);
    }
    let class = resolve_class(model, x, cfg.class_idx)?;
    let baseline = cfg.baseline.resolve(x)?;
    if x == &baseline {
        return zero_attribution(model, x, baseline, class, Method::GeexMerged, masks.seed());
    }
    merged_core(model, x, baseline, class, masks, cfg.workers)
}

fn merged_core(
    model: &dyn QueryModel,
    x: &Grid,
    baseline: Grid,
    class: usize,
    masks: &MaskSet,
    workers: Option<usize>,
) -> Result<Attribution> {
    let values = fan_out(workers, masks.len(), |i| {
        let alpha = masks.alphas()[i];
        let z: Vec<f64> = baseline
            .data()
            .iter()
            .zip(x.data())
            .zip(masks.masks()[i].data())
            .map(|((&b, &xv), &e)| lerp(b, xv, alpha) + e)
            .collect();
        model.evaluate(&z)[class]
    })?;
    let mut acc = vec![0.0; x.len()];
    accumulate(&mut acc, &values, masks.scores(), masks.group_size());
    let xi = path_scale(x, &baseline, &acc, masks.len() as f64);
    let residual = completeness(model, x, &baseline, class, &xi);
    Ok(Attribution {
        xi,
        baseline,
        class_idx: class,
        n_queries: masks.len(),
        completeness_residual: Some(residual),
        method: Method::GeexMerged,
        seed: masks.seed(),
        output_kind: model.output_kind(),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::BaselineKind;
    use crate::models::AnalyticModel;

    fn g(v: &[f64]) -> Grid {
        Grid::from_vec(v.to_vec()).unwrap()
    }

    fn cfg(n_star: usize) -> ExplainConfig {
        ExplainConfig {
            n_star,
            ..ExplainConfig::default()
        }
    }

    #[test]
    fn mirrored_pairs_cancel_on_constant_model() {
        let m = AnalyticModel::constant(0.3, &[4]);
        let a = ge_estimate(&m, &g(&[1.0, 2.0, 3.0, 4.0]), &cfg(100)).unwrap();
        assert!(a.xi.data().iter().all(|v| *v == 0.0));
        let a = geex_merged(&m, &g(&[1.0, 2.0, 3.0, 4.0]), &cfg(100)).unwrap();
        assert!(a.xi.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_path_issues_no_queries() {
        let m = AnalyticModel::Sigmoid1d;
        let c = ExplainConfig {
            baseline: BaselineKind::Custom(g(&[0.4])),
            ..cfg(100)
        };
        for a in [
            geex_merged(&m, &g(&[0.4]), &c).unwrap(),
            geex_interpolated(&m, &g(&[0.4]), &c).unwrap(),
        ] {
            assert_eq!(a.xi.data(), &[0.0]);
            assert_eq!(a.n_queries, 0);
            assert_eq!(a.completeness_residual, Some(0.0));
        }
    }

    #[test]
    fn interpolated_budget_must_split_evenly() {
        let m = AnalyticModel::Sigmoid1d;
        let c = ExplainConfig {
            s_steps: 3,
            ..cfg(100)
        };
        assert_eq!(
            geex_interpolated(&m, &g(&[1.0]), &c).unwrap_err(),
            ExplainError::BudgetNotDivisible {
                n_star: 100,
                s_steps: 3
            }
        );
        let c = ExplainConfig {
            s_steps: 10,
            ..cfg(30)
        };
        assert!(matches!(
            geex_interpolated(&m, &g(&[1.0]), &c),
            Err(ExplainError::Sampling(SamplingError::OddWithMirror(3)))
        ));
    }

    #[test]
    fn fresh_masks_change_the_estimate() {
        let m = AnalyticModel::Sigmoid1d;
        let base = ExplainConfig {
            baseline: BaselineKind::Custom(g(&[-3.0])),
            sigma: 0.5,
            ..cfg(1000)
        };
        let fresh = ExplainConfig {
            fresh_masks_per_step: true,
            ..base.clone()
        };
        let a = geex_interpolated(&m, &g(&[3.0]), &base).unwrap();
        let b = geex_interpolated(&m, &g(&[3.0]), &fresh).unwrap();
        assert_ne!(a.xi, b.xi);
        assert_eq!(a.n_queries, b.n_queries);
    }

    #[test]
    fn ge_records_its_ignored_settings() {
        let a = ge_estimate(&AnalyticModel::Sigmoid1d, &g(&[0.0]), &cfg(10)).unwrap();
        assert_eq!(a.completeness_residual, None);
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn shared_masks_must_fit() {
        let dist = SearchDistribution::new(1.0, &[3]).unwrap();
        let ms = generate_mask_set(&dist, 4, 0, true, None, Default::default()).unwrap();
        let err = geex_merged_with_masks(&AnalyticModel::Sigmoid1d, &g(&[1.0]), &cfg(4), &ms);
        assert!(matches!(err, Err(ExplainError::MaskMismatch(_))));
    }
}
