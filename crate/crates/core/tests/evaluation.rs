use geex_core::evaluation::{
    convergence_sweep, deletion_curve, deletion_curve_from_scores, deletion_order, mean_std,
    oracle_curve, Replacement,
};
use geex_core::models::{AnalyticModel, QueryModel, ToyRecipe};
use geex_core::{explain, geex_merged, BaselineKind, ExplainConfig, Grid, Method};
use proptest::prelude::*;

fn g(v: &[f64]) -> Grid {
    Grid::from_vec(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curves_depend_only_on_ranking(
        scores in proptest::collection::vec(-5.0f64..5.0, 16),
        shift in -3.0f64..3.0,
        stretch in 0.1f64..10.0,
        seed in 0u64..100,
    ) {
        let net = geex_core::DenseNet::random(&[16], &ToyRecipe::default().arch(), seed).unwrap();
        let x = Grid::new(vec![16], (0..16).map(|i| (i as f64 * 0.3).sin().abs()).collect()).unwrap();
        let a = Grid::new(vec![16], scores.clone()).unwrap();
        // A positive affine map keeps the ranking.
        let b = Grid::new(vec![16], scores.iter().map(|v| shift + stretch * v).collect()).unwrap();
        let z = Grid::zeros(&[16]).unwrap();
        for r in [Replacement::Baseline, Replacement::Gaussian] {
            let ca = deletion_curve_from_scores(&net, &x, &a, &z, 0, 16, 1, r, seed).unwrap();
            let cb = deletion_curve_from_scores(&net, &x, &b, &z, 0, 16, 1, r, seed).unwrap();
            prop_assert_eq!(&ca, &cb);
            let again = deletion_curve_from_scores(&net, &x, &a, &z, 0, 16, 1, r, seed).unwrap();
            prop_assert_eq!(&ca, &again);
            let mean = ca.ratios.iter().sum::<f64>() / ca.ratios.len() as f64;
            prop_assert!((ca.aopc - mean).abs() <= 1e-12);
            // Probability outputs: f(x^(i)) >= 0 so every ratio is at most 1.
            prop_assert!(ca.ratios.iter().all(|v| *v <= 1.0));
        }
    }
}

#[test]
fn all_drop_model_has_unit_aopc() {
    // f(x) = x_0 * x_1 vanishes once either feature is removed.
    struct Product;
    impl QueryModel for Product {
        fn input_shape(&self) -> &[usize] {
            &[2]
        }
        fn num_classes(&self) -> usize {
            1
        }
        fn capability(&self) -> geex_core::Capability {
            geex_core::Capability::BlackBox
        }
        fn evaluate(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0] * x[1]]
        }
    }
    let c = deletion_curve_from_scores(
        &Product,
        &g(&[2.0, 3.0]),
        &g(&[0.1, 0.9]),
        &g(&[0.0, 0.0]),
        0,
        2,
        1,
        Replacement::Baseline,
        0,
    )
    .unwrap();
    assert_eq!(c.ratios, vec![1.0, 1.0]);
    assert_eq!(c.aopc, 1.0);
}

#[test]
fn order_is_deterministic_on_ties() {
    assert_eq!(deletion_order(&g(&[0.0; 5])), vec![0, 1, 2, 3, 4]);
}

#[test]
fn toy_model_geex_finds_the_patch() {
    let recipe = ToyRecipe::default();
    let out = recipe.train().unwrap();
    assert_eq!(out.train_accuracy, 1.0);
    let data = recipe.dataset().unwrap();
    let sample = data.samples.iter().find(|s| s.label == 0).unwrap();
    let mut avg = vec![0.0; 64];
    for seed in 0..5 {
        let cfg = ExplainConfig {
            n_star: 5_000,
            sigma: 1.0,
            seed,
            class_idx: Some(0),
            ..Default::default()
        };
        let a = geex_merged(&out.net, &sample.input, &cfg).unwrap();
        for (acc, v) in avg.iter_mut().zip(a.xi.data()) {
            *acc += v.abs() / 5.0;
        }
    }
    let top = deletion_order(&Grid::new(vec![8, 8], avg).unwrap());
    let hits = top[..9]
        .iter()
        .filter(|p| data.relevant[0].contains(p))
        .count();
    assert!(hits >= 6, "{hits} of 9 patch pixels in the top 9");
}

#[test]
fn oracle_curve_dominates_index_ordering() {
    let recipe = ToyRecipe::default();
    let out = recipe.train().unwrap();
    let data = recipe.dataset().unwrap();
    let x = &data.samples[0].input;
    let z = Grid::zeros(&[8, 8]).unwrap();
    let tier = vec![data.relevant[0].clone()];
    let greedy = oracle_curve(&out.net, x, &z, 0, &tier, 64, Replacement::Baseline, 0).unwrap();
    let gt = geex_core::evaluation::ground_truth_scores(&[8, 8], &data.relevant[0]).unwrap();
    let plain =
        deletion_curve_from_scores(&out.net, x, &gt, &z, 0, 64, 1, Replacement::Baseline, 0)
            .unwrap();
    // Both delete the patch first, so the 9-step prefix covers the same set.
    assert!((greedy.ratios[8] - plain.ratios[8]).abs() < 1e-12);
    assert!(greedy.aopc >= plain.aopc);
}

#[test]
fn sweep_on_sigmoid_decreases() {
    let cfg = ExplainConfig {
        sigma: 0.1,
        ..Default::default()
    };
    let seeds: Vec<u64> = (0..10).collect();
    let s = convergence_sweep(
        &AnalyticModel::Sigmoid1d,
        &g(&[3.0]),
        &[500, 2_000, 8_000, 32_000],
        &cfg,
        &seeds,
        None,
    )
    .unwrap();
    assert!(s.is_non_increasing(), "{:?}", s.mean_rel_l2);
    assert!(
        s.mean_rel_l2.windows(2).all(|w| w[1] < w[0]),
        "{:?}",
        s.mean_rel_l2
    );
}

#[test]
fn sweep_on_linear_model_reaches_two_percent() {
    let m = AnalyticModel::linear(g(&[2.0, -3.0]), 0.5);
    let cfg = ExplainConfig::default();
    let s = convergence_sweep(
        &m,
        &g(&[1.0, 1.0]),
        &[10_000, 100_000],
        &cfg,
        &[0, 1, 2],
        None,
    )
    .unwrap();
    // Error scales as 1 / sqrt(n*): a tenfold budget shrinks it by ~3.2.
    assert!(s.mean_rel_l2[1] < 0.02, "{:?}", s.mean_rel_l2);
    assert!(
        s.mean_rel_l2[1] < s.mean_rel_l2[0] / 2.0,
        "{:?}",
        s.mean_rel_l2
    );
}

#[test]
fn sweep_with_single_seed_has_zero_spread() {
    let s = convergence_sweep(
        &AnalyticModel::Sigmoid1d,
        &g(&[1.0]),
        &[100, 200],
        &ExplainConfig::default(),
        &[4],
        None,
    )
    .unwrap();
    assert_eq!(s.std_rel_l2, vec![0.0, 0.0]);
}

#[test]
fn explicand_equal_to_baseline_gives_flat_zero_attribution() {
    let m = AnalyticModel::Sigmoid1d;
    let cfg = ExplainConfig {
        baseline: BaselineKind::Custom(g(&[0.5])),
        ..Default::default()
    };
    let a = explain(Method::GeexMerged, &m, &g(&[0.5]), &cfg).unwrap();
    let c = deletion_curve(&m, &g(&[0.5]), &a, 1, Replacement::Baseline, 0).unwrap();
    assert_eq!(c.ratios, vec![0.0]);
    assert_eq!(mean_std(&[2.0, 2.0]), (2.0, 0.0));
}
