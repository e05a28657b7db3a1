use rand::Rng;
use rand_distr::StandardNormal;

use super::{completeness, fan_out, path_scale, Attribution, ExplainError, Method, Result};
use crate::grid::{lerp, Grid};
use crate::models::Capability;
use crate::models::{check_class, ModelError, OutputKind, QueryModel};
use crate::rng::{stream, Domain};

fn require_white_box(model: &dyn QueryModel) -> Result<()> {
    if model.capability() != Capability::WhiteBox {
        return Err(ModelError::NotWhiteBox.into());
    }
    Ok(())
}

fn grad(model: &dyn QueryModel, input: &[f64], class: usize) -> Result<Vec<f64>> {
    model
        .evaluate_gradient(input, class)
        .ok_or(ExplainError::Model(ModelError::NotWhiteBox))
}

/// Right Riemann sum of analytic gradients along the straight path:
/// `xi = ((x - b) / steps) * sum_{j=1..steps} grad f(x(j/steps))`.
pub fn ig_reference(
    model: &dyn QueryModel,
    x: &Grid,
    baseline: &Grid,
    steps: usize,
    class_idx: usize,
) -> Result<Attribution> {
    require_white_box(model)?;
    if steps == 0 {
        return Err(ExplainError::NoSteps);
    }
    model.query(x)?;
    model.query(baseline)?;
    check_class(class_idx, model.num_classes())?;
    let mut attr = Attribution {
        xi: Grid::zeros(x.shape())?,
        baseline: baseline.clone(),
        class_idx,
        n_queries: 0,
        completeness_residual: Some(0.0),
        method: Method::Ig,
        seed: 0,
        output_kind: model.output_kind(),
        warnings: Vec::new(),
    };
    if x == baseline {
        return Ok(attr);
    }
    let grads = fan_out(None, steps, |j| {
        let alpha = (j + 1) as f64 / steps as f64;
        let z: Vec<f64> = baseline
            .data()
            .iter()
            .zip(x.data())
            .map(|(&b, &xv)| lerp(b, xv, alpha))
            .collect();
        grad(model, &z, class_idx)
    })?;
    let mut acc = vec![0.0; x.len()];
    for g in grads {
        for (a, v) in acc.iter_mut().zip(g?) {
            *a += v;
        }
    }
    attr.xi = path_scale(x, baseline, &acc, steps as f64);
    attr.completeness_residual = Some(completeness(model, x, baseline, class_idx, &attr.xi));
    attr.n_queries = steps;
    Ok(attr)
}

/// Mean analytic gradient under Gaussian input noise:
/// `xi = (1/n) sum_i grad f(x + eps_i)`, `eps_i ~ N(0, sigma^2 I)`.
///
/// With `mirrored`, noise comes in antithetic pairs and `n` must be even.
pub fn smoothgrad_reference(
    model: &dyn QueryModel,
    x: &Grid,
    n: usize,
    sigma: f64,
    mirrored: bool,
    seed: u64,
    class_idx: usize,
) -> Result<Attribution> {
    require_white_box(model)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ExplainError::BadSigma(sigma));
    }
    if n == 0 || (mirrored && !n.is_multiple_of(2)) {
        return Err(ExplainError::BudgetTooSmall(n));
    }
    model.query(x)?;
    check_class(class_idx, model.num_classes())?;
    let groups = if mirrored { n / 2 } else { n };
    let grads = fan_out(None, groups, |k| {
        let mut rng = stream(seed, Domain::SmoothGrad, k as u64);
        let eps: Vec<f64> = (0..x.len())
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let plus: Vec<f64> = x.data().iter().zip(&eps).map(|(a, e)| a + e).collect();
        let mut g = grad(model, &plus, class_idx)?;
        if mirrored {
            let minus: Vec<f64> = x.data().iter().zip(&eps).map(|(a, e)| a - e).collect();
            for (gv, hv) in g.iter_mut().zip(grad(model, &minus, class_idx)?) {
                *gv += hv;
            }
        }
        Ok::<_, ExplainError>(g)
    })?;
    let mut acc = vec![0.0; x.len()];
    for g in grads {
        for (a, v) in acc.iter_mut().zip(g?) {
            *a += v;
        }
    }
    let xi = Grid::new(
        x.shape().to_vec(),
        acc.into_iter().map(|v| v / n as f64).collect(),
    )?;
    Ok(Attribution {
        xi,
        baseline: Grid::zeros(x.shape())?,
        class_idx,
        n_queries: n,
        completeness_residual: None,
        method: Method::SmoothGrad,
        seed,
        output_kind: model.output_kind(),
        warnings: Vec::new(),
    })
}

/// Seeded uniform values in `[0, 1)`. Only their order is meaningful.
pub fn random_reference(shape: &[usize], seed: u64) -> Result<Attribution> {
    let zeros = Grid::zeros(shape)?;
    let mut rng = stream(seed, Domain::Random, 0);
    let values = (0..zeros.len()).map(|_| rng.random::<f64>()).collect();
    Ok(Attribution {
        xi: Grid::new(shape.to_vec(), values)?,
        baseline: zeros,
        class_idx: 0,
        n_queries: 0,
        completeness_residual: None,
        method: Method::Random,
        seed,
        output_kind: OutputKind::Raw,
        warnings: Vec::new(),
    })
}
