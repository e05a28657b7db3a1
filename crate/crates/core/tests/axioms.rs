//! Attribution axioms as executable properties.

use geex_core::models::{Activation, AnalyticModel, Capability, DenseNet, LayerSpec, QueryModel};
use geex_core::{
    explain, geex_interpolated, geex_merged, geex_merged_with_masks, generate_mask_set, AlphaMode,
    BaselineKind, ExplainConfig, Grid, Method, SearchDistribution,
};
use proptest::prelude::*;

fn g(v: &[f64]) -> Grid {
    Grid::from_vec(v.to_vec()).unwrap()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn small_net(seed: u64) -> DenseNet {
    DenseNet::random(
        &[4, 4],
        &[
            LayerSpec::new(6, Activation::Relu),
            LayerSpec::new(2, Activation::Sigmoid),
        ],
        seed,
    )
    .unwrap()
}

/// `a * f1 + b * f2` over single-output models.
struct Mix<'a> {
    a: f64,
    f1: &'a dyn QueryModel,
    b: f64,
    f2: &'a dyn QueryModel,
}

impl QueryModel for Mix<'_> {
    fn input_shape(&self) -> &[usize] {
        self.f1.input_shape()
    }
    fn num_classes(&self) -> usize {
        1
    }
    fn capability(&self) -> Capability {
        Capability::BlackBox
    }
    fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        vec![self.a * self.f1.evaluate(input)[0] + self.b * self.f2.evaluate(input)[0]]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn missingness_is_bitwise_zero(
        x in proptest::collection::vec(-1.0f64..1.0, 16),
        b in proptest::collection::vec(-1.0f64..1.0, 16),
        shared in proptest::collection::vec(any::<bool>(), 16),
        seed in 0u64..1000,
    ) {
        let baseline: Vec<f64> = b.iter().zip(&x).zip(&shared)
            .map(|((&bv, &xv), &s)| if s { xv } else { bv })
            .collect();
        let x = Grid::new(vec![4, 4], x).unwrap();
        let cfg = ExplainConfig {
            n_star: 200,
            s_steps: 2,
            seed,
            class_idx: Some(0),
            baseline: BaselineKind::Custom(Grid::new(vec![4, 4], baseline).unwrap()),
            ..Default::default()
        };
        let net = small_net(seed);
        for m in [Method::GeexMerged, Method::GeexInterpolated, Method::Ig] {
            let a = explain(m, &net, &x, &cfg).unwrap();
            for (l, &s) in shared.iter().enumerate() {
                if s {
                    prop_assert_eq!(a.xi.data()[l].to_bits(), 0u64, "{} at {}", m, l);
                }
            }
        }
    }
}

#[test]
fn linearity_under_shared_masks() {
    let w1 = g(&[0.5, -1.0, 2.0, 0.1]);
    let f1 = AnalyticModel::linear(w1, 0.2);
    let f2 =
        AnalyticModel::dummy_feature(3, AnalyticModel::linear(g(&[1.0, 1.0, -3.0]), 0.0)).unwrap();
    let f3 = DenseNet::random(
        &[4],
        &[
            LayerSpec::new(5, Activation::Sigmoid),
            LayerSpec::new(1, Activation::Sigmoid),
        ],
        2,
    )
    .unwrap();
    let x = g(&[1.0, -0.5, 0.25, 2.0]);
    let cfg = ExplainConfig {
        class_idx: Some(0),
        ..Default::default()
    };
    let dist = SearchDistribution::new(1.0, &[4]).unwrap();
    let masks = generate_mask_set(&dist, 4_000, 17, true, None, AlphaMode::Stratified).unwrap();
    for (fa, fb) in [
        (&f1 as &dyn QueryModel, &f3 as &dyn QueryModel),
        (&f2, &f3),
        (&f1, &f2),
    ] {
        for (a, b) in [(1.0, 1.0), (2.5, -0.75), (-3.0, 0.0)] {
            let mix = Mix {
                a,
                f1: fa,
                b,
                f2: fb,
            };
            let xm = geex_merged_with_masks(&mix, &x, &cfg, &masks).unwrap();
            let x1 = geex_merged_with_masks(fa, &x, &cfg, &masks).unwrap();
            let x2 = geex_merged_with_masks(fb, &x, &cfg, &masks).unwrap();
            for l in 0..4 {
                let expect = a * x1.xi.data()[l] + b * x2.xi.data()[l];
                let got = xm.xi.data()[l];
                assert!((got - expect).abs() <= 1e-10, "{got} vs {expect}");
            }
        }
    }
}

#[test]
fn implementation_invariance_is_bit_exact() {
    let net = small_net(9);
    let x = Grid::new(
        vec![4, 4],
        (0..16).map(|i| (i as f64 * 0.37).sin()).collect(),
    )
    .unwrap();
    let cfg = ExplainConfig {
        n_star: 2_000,
        seed: 4,
        ..Default::default()
    };
    for position in [0, 1, 2] {
        let twin = net.insert_identity_layer(position).unwrap();
        for m in [
            Method::GeexMerged,
            Method::GeexInterpolated,
            Method::Ge,
            Method::Ig,
        ] {
            let a = explain(m, &net, &x, &cfg).unwrap();
            let b = explain(m, &twin, &x, &cfg).unwrap();
            assert_eq!(a.xi, b.xi, "{m} with identity at {position}");
        }
    }
}

#[test]
fn sensitivity_single_nonzero_coordinate() {
    let m = AnalyticModel::SigmoidOfXOnly2d;
    let x = g(&[1.0, 0.5]);
    let target = sigmoid(1.0) - sigmoid(-1.0);
    let runs: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = ExplainConfig {
                sigma: 0.1,
                seed,
                baseline: BaselineKind::Custom(g(&[-1.0, 0.5])),
                ..Default::default()
            };
            let a = geex_merged(&m, &x, &cfg).unwrap();
            assert_eq!(a.xi.data()[1].to_bits(), 0);
            assert_ne!(a.xi.data()[0], 0.0);
            a.xi.data()[0]
        })
        .collect();
    let (mean, sd) = mean_std(&runs);
    for r in &runs {
        assert!((r - target).abs() <= 3.0 * sd, "{r} vs {target} (sd {sd})");
    }
    assert!(
        (mean - target).abs() <= 3.0 * sd / 20f64.sqrt(),
        "{mean} vs {target}"
    );
}

#[test]
fn dummy_feature_gets_no_attribution_on_average() {
    let m = AnalyticModel::dummy_feature(1, AnalyticModel::Sigmoid1d).unwrap();
    let x = g(&[2.0, 1.5]);
    let runs: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = ExplainConfig {
                seed,
                baseline: BaselineKind::Custom(g(&[-2.0, 0.0])),
                ..Default::default()
            };
            geex_merged(&m, &x, &cfg).unwrap().xi.data()[1]
        })
        .collect();
    let (mean, sd) = mean_std(&runs);
    assert!(mean.abs() <= 0.01, "{mean}");
    assert!(runs.iter().all(|r| r.abs() <= 3.0 * sd), "{runs:?} sd {sd}");
}

fn residuals(n_star: usize, sigma: f64, seeds: u64) -> Vec<f64> {
    (0..seeds)
        .map(|seed| {
            let cfg = ExplainConfig {
                n_star,
                sigma,
                seed,
                baseline: BaselineKind::Custom(g(&[-3.0])),
                ..Default::default()
            };
            geex_merged(&AnalyticModel::Sigmoid1d, &g(&[3.0]), &cfg)
                .unwrap()
                .completeness_residual
                .unwrap()
        })
        .collect()
}

#[test]
fn completeness_residual_shrinks_with_budget() {
    let small = residuals(2_500, 0.1, 20);
    let large = residuals(40_000, 0.1, 20);
    let mean_abs = |v: &[f64]| v.iter().map(|r| r.abs()).sum::<f64>() / v.len() as f64;
    assert!(
        mean_abs(&large) < mean_abs(&small),
        "{} !< {}",
        mean_abs(&large),
        mean_abs(&small)
    );
    for v in [&small, &large] {
        let (mean, sd) = mean_std(v);
        assert!(mean.abs() <= 3.0 * sd, "mean {mean} sd {sd}");
    }
}

#[test]
fn merged_beats_interpolated_at_equal_budget() {
    let x = g(&[3.0]);
    let mut merged = 0.0;
    let mut interp = 0.0;
    for seed in 0..50 {
        let cfg = ExplainConfig {
            n_star: 2_000,
            s_steps: 5,
            sigma: 0.5,
            seed,
            baseline: BaselineKind::Custom(g(&[-3.0])),
            ..Default::default()
        };
        let m = AnalyticModel::Sigmoid1d;
        merged += geex_merged(&m, &x, &cfg)
            .unwrap()
            .completeness_residual
            .unwrap()
            .abs();
        interp += geex_interpolated(&m, &x, &cfg)
            .unwrap()
            .completeness_residual
            .unwrap()
            .abs();
    }
    assert!(merged < interp, "{merged} !< {interp}");
}

#[test]
fn worker_count_does_not_change_results() {
    let net = small_net(3);
    let x = Grid::new(
        vec![4, 4],
        (0..16).map(|i| (i as f64 * 0.7).cos()).collect(),
    )
    .unwrap();
    for m in Method::ALL {
        let runs: Vec<Grid> = [Some(1), Some(8), None]
            .into_iter()
            .map(|workers| {
                let cfg = ExplainConfig {
                    n_star: 1_000,
                    seed: 2,
                    workers,
                    ..Default::default()
                };
                explain(m, &net, &x, &cfg).unwrap().xi
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{m}");
        assert_eq!(runs[0], runs[2], "{m}");
    }
}
