use geex_core::{
    generate_mask_set, sample_count_stats, AlphaMode, Grid, Kernel, SearchDistribution,
};

fn sample_mean(masks: &[Grid], coord: usize) -> f64 {
    masks.iter().map(|m| m.data()[coord]).sum::<f64>() / masks.len() as f64
}

fn sample_std(masks: &[Grid], coord: usize) -> f64 {
    let mu = sample_mean(masks, coord);
    let var = masks
        .iter()
        .map(|m| (m.data()[coord] - mu).powi(2))
        .sum::<f64>()
        / masks.len() as f64;
    var.sqrt()
}

#[test]
fn unmirrored_mean_is_near_zero() {
    let dist = SearchDistribution::new(1.0, &[4, 4]).unwrap();
    for seed in [0, 1, 99] {
        let set =
            generate_mask_set(&dist, 10_000, seed, false, None, AlphaMode::Stratified).unwrap();
        for c in 0..16 {
            let m = sample_mean(set.masks(), c);
            assert!(m.abs() <= 0.05, "seed {seed} coord {c}: {m}");
        }
    }
}

#[test]
fn mirrored_mean_is_exactly_zero() {
    let dist = SearchDistribution::new(0.7, &[3, 5]).unwrap();
    let set = generate_mask_set(&dist, 1_000, 4, true, None, AlphaMode::IidUniform).unwrap();
    let stats = sample_count_stats(&set);
    assert!(stats.mean.data().iter().all(|v| *v == 0.0));
}

#[test]
fn unmirrored_std_concentrates_at_sigma() {
    let dist = SearchDistribution::new(1.0, &[8]).unwrap();
    let set = generate_mask_set(&dist, 10_000, 5, false, None, AlphaMode::Stratified).unwrap();
    let stats = sample_count_stats(&set);
    for (c, s) in stats.std.data().iter().enumerate() {
        assert!((0.95..=1.05).contains(s), "coord {c}: {s}");
        assert!((s - sample_std(set.masks(), c)).abs() < 1e-12);
    }
}

#[test]
fn smoothing_preserves_interior_variance() {
    let sigma = 1.3;
    let dist = SearchDistribution::new(sigma, &[8, 8]).unwrap();
    let kernel = Kernel::gaussian(5, 0.7).unwrap();
    let set = generate_mask_set(
        &dist,
        10_000,
        11,
        false,
        Some(kernel),
        AlphaMode::Stratified,
    )
    .unwrap();
    // Interior: every tap of the 5x5 kernel lands inside the grid.
    for r in 2..6 {
        for c in 2..6 {
            let s = sample_std(set.masks(), r * 8 + c);
            assert!((s / sigma - 1.0).abs() <= 0.05, "pixel ({r},{c}): {s}");
        }
    }
}

#[test]
fn stratified_alphas_are_more_uniform_than_iid() {
    // Kolmogorov distance to U[0,1].
    fn ks(mut a: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        let n = a.len() as f64;
        a.iter()
            .enumerate()
            .map(|(i, v)| {
                ((i as f64 + 1.0) / n - v)
                    .abs()
                    .max((v - i as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }
    let dist = SearchDistribution::new(1.0, &[1]).unwrap();
    let strat = generate_mask_set(&dist, 2_000, 3, false, None, AlphaMode::Stratified).unwrap();
    let iid = generate_mask_set(&dist, 2_000, 3, false, None, AlphaMode::IidUniform).unwrap();
    assert!(ks(strat.alphas().to_vec()) <= 1.0 / 2_000.0 + 1e-12);
    assert!(ks(iid.alphas().to_vec()) > ks(strat.alphas().to_vec()));
}
