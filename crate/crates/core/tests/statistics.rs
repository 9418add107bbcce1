use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rmt_core::density::DensityModel;
use rmt_core::ensembles::{sample, spectrum, EnsembleKind, EnsembleSpec, EntryDist, SpectralPoints, SpectrumKind};
use rmt_core::statistics::{
    correlation_estimate, counting_tail, gap_statistics, gap_statistics_scaled, ks_critical_value, ks_two_sample,
    observable_g, sine_kernel_pair, CorrelationGrid,
};
use rmt_core::RmtError;

fn gue(n: usize, seed: u64) -> SpectralPoints {
    spectrum(&sample(&EnsembleSpec::wigner(EnsembleKind::WignerHermitian, n, EntryDist::Gaussian, seed)).unwrap())
        .unwrap()
}

fn goe(n: usize, seed: u64) -> SpectralPoints {
    spectrum(&sample(&EnsembleSpec::wigner(EnsembleKind::WignerSymmetric, n, EntryDist::Gaussian, seed)).unwrap())
        .unwrap()
}

/// Eigenvalues of the tridiagonal beta-Hermite model, scaled to the
/// semicircle on [-2, 2]. Independent of the dense GUE sampler.
fn tridiagonal_hermite(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = 1.0 / (2.0 * n as f64).sqrt();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        m[(i, i)] = z * 2f64.sqrt() * scale;
        if i + 1 < n {
            let chi = ChiSquared::new(beta * (n - 1 - i) as f64).unwrap().sample(rng).sqrt();
            m[(i, i + 1)] = chi * scale;
            m[(i + 1, i)] = chi * scale;
        }
    }
    let mut ev: Vec<f64> = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    ev.sort_by(f64::total_cmp);
    ev
}

fn s_grid() -> Vec<f64> {
    (0..=40).map(|k| k as f64 * 0.1).collect()
}

#[test]
fn lambda_on_equally_spaced_points() {
    let sc = DensityModel::semicircle();
    let n = 100;
    let rho = sc.rho(0.0);
    let step = 1.0 / (n as f64 * rho);
    let x: Vec<f64> = (-50..50).map(|k| k as f64 * step).collect();
    let ell = 10.5 * step;
    let stats = gap_statistics_scaled(&x, n, &sc, 0.0, ell, &[0.0, 0.999, 1.0 - 1e-9, 1.0 + 1e-9, 50.0]).unwrap();
    assert!(stats.rescaled_gaps.iter().all(|g| (g - 1.0).abs() < 1e-12));
    // Points k*step with |k| <= 10: 21 gaps in the window.
    let count = stats.rescaled_gaps.len();
    assert_eq!(count, 21);
    let level = count as f64 / (2.0 * n as f64 * ell * rho);
    assert_eq!(stats.lambda_curve[0], 0.0);
    assert_eq!(stats.lambda_curve[1], 0.0);
    assert_eq!(stats.lambda_curve[2], 0.0);
    assert!((stats.lambda_curve[3] - level).abs() < 1e-12);
    assert!((stats.lambda_curve[4] - level).abs() < 1e-12);
}

#[test]
fn lambda_rejects_edge_energy() {
    let p = gue(50, 1);
    let sc = DensityModel::semicircle();
    assert!(matches!(gap_statistics(&p, &sc, 2.0, 0.1, &[1.0]), Err(RmtError::Domain(_))));
    assert!(matches!(gap_statistics(&p, &sc, -3.0, 0.1, &[1.0]), Err(RmtError::Domain(_))));
}

#[test]
fn gue_lambda_matches_tridiagonal_oracle() {
    let n = 400;
    let sc = DensityModel::semicircle();
    let ell = (n as f64).powf(-0.1);
    let grid = s_grid();
    let mut ours = vec![0.0; grid.len()];
    let samples = 300;
    for seed in 0..samples {
        let st = gap_statistics(&gue(n, seed), &sc, 0.0, ell, &grid).unwrap();
        for (a, v) in ours.iter_mut().zip(&st.lambda_curve) {
            *a += v / samples as f64;
        }
    }
    let mut oracle = vec![0.0; grid.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 1500;
    for _ in 0..draws {
        let x = tridiagonal_hermite(n, 2.0, &mut rng);
        let st = gap_statistics_scaled(&x, n, &sc, 0.0, ell, &grid).unwrap();
        for (a, v) in oracle.iter_mut().zip(&st.lambda_curve) {
            *a += v / draws as f64;
        }
    }
    let top = oracle[grid.len() - 1];
    let sup = ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(sup <= 0.02 * top, "sup {sup} vs level {top}");
}

#[test]
fn order_one_is_flat() {
    let sc = DensityModel::semicircle();
    let samples: Vec<SpectralPoints> = (0..100).map(|s| goe(500, s)).collect();
    let grid = CorrelationGrid { alpha_edges: (-5..=5).map(|k| k as f64).collect(), separation_edges: vec![] };
    let est = correlation_estimate(&samples, &sc, 1, 0.0, 0.05, &grid).unwrap();
    assert!(!est.insufficient_statistics);
    for v in &est.values {
        assert!((v - 1.0).abs() <= 0.05, "{v}");
    }
}

#[test]
fn order_one_self_normalizes() {
    // Integral over the alpha range equals the average count placed there.
    let sc = DensityModel::semicircle();
    let samples: Vec<SpectralPoints> = (0..10).map(|s| goe(200, s)).collect();
    let grid = CorrelationGrid { alpha_edges: vec![-3.0, -1.0, 0.5, 3.0], separation_edges: vec![] };
    let est = correlation_estimate(&samples, &sc, 1, 0.0, 0.1, &grid).unwrap();
    let integral: f64 = est.values.iter().zip(grid.alpha_edges.windows(2)).map(|(v, w)| v * (w[1] - w[0])).sum();
    // Placed count per sample: points whose alpha lands in [-3, 3], averaged over E'.
    let rho = sc.rho(0.0);
    let mut placed = 0.0;
    let m = 2000;
    for s in &samples {
        let scale = 200.0 * rho;
        for k in 0..m {
            let ep = -0.1 + 0.2 * (k as f64 + 0.5) / m as f64;
            placed += s.values().iter().filter(|&&x| (-3.0..3.0).contains(&(scale * (x - ep)))).count() as f64;
        }
    }
    placed /= (m * samples.len()) as f64;
    assert!((integral - placed).abs() <= 0.01 * placed, "{integral} vs {placed}");
}

fn semicircle_poisson(n: usize, rng: &mut ChaCha8Rng) -> SpectralPoints {
    let sc = DensityModel::semicircle();
    let top = sc.max_rho();
    let mut x = Vec::with_capacity(n);
    while x.len() < n {
        let v: f64 = rng.random_range(-2.0..2.0);
        if rng.random::<f64>() * top <= sc.rho(v) {
            x.push(v);
        }
    }
    SpectralPoints::from_unsorted(x, SpectrumKind::Eigenvalues).unwrap()
}

fn pair_grid() -> CorrelationGrid {
    CorrelationGrid { alpha_edges: vec![-1.0, 1.0], separation_edges: (1..=15).map(|k| k as f64 * 0.2).collect() }
}

#[test]
fn poisson_pair_correlation_is_flat() {
    let sc = DensityModel::semicircle();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<SpectralPoints> = (0..300).map(|_| semicircle_poisson(400, &mut rng)).collect();
    let est = correlation_estimate(&samples, &sc, 2, 0.0, 0.2, &pair_grid()).unwrap();
    for v in &est.values {
        assert!((v - 1.0).abs() <= 0.07, "{v}");
    }
    // No repulsion at the smallest separations.
    assert!(est.values[0] > 0.9);
}

/// Mean of the sine-kernel pair function over [a, b].
fn sine_bin_average(a: f64, b: f64) -> f64 {
    let m = 2000;
    (0..m).map(|k| sine_kernel_pair(a + (b - a) * (k as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64
}

#[test]
fn gue_pair_correlation_follows_sine_kernel() {
    let sc = DensityModel::semicircle();
    let samples: Vec<SpectralPoints> = (0..200).map(|s| gue(400, s + 500)).collect();
    let grid = pair_grid();
    let est = correlation_estimate(&samples, &sc, 2, 0.0, 0.2, &grid).unwrap();
    assert!(!est.insufficient_statistics);
    for (v, w) in est.values.iter().zip(grid.separation_edges.windows(2)) {
        let reference = sine_bin_average(w[0], w[1]);
        assert!((v - reference).abs() <= 0.07, "[{}, {}]: {v} vs {reference}", w[0], w[1]);
    }
    assert!(est.values[0] < 0.3);
}

#[test]
fn order_two_is_reflection_symmetric() {
    let sc = DensityModel::semicircle();
    let samples: Vec<SpectralPoints> = (0..200).map(|s| goe(500, s + 1000)).collect();
    let grid = CorrelationGrid { alpha_edges: vec![-2.0, 0.0, 2.0], separation_edges: vec![-3.0, -0.5, 0.5, 3.0] };
    let est = correlation_estimate(&samples, &sc, 2, 0.0, 0.3, &grid).unwrap();
    // Cell (a, u) maps to (1 - a, 2 - u) under x -> -x.
    let sb = 3;
    let mean = est.values.iter().sum::<f64>() / est.values.len() as f64;
    for a in 0..2 {
        for u in 0..sb {
            let v = est.values[a * sb + u];
            let r = est.values[(1 - a) * sb + (sb - 1 - u)];
            assert!((v - r).abs() <= 0.02 * mean, "cell ({a},{u}): {v} vs {r}");
        }
    }
}

#[test]
fn correlation_flags_sparse_bins() {
    let sc = DensityModel::semicircle();
    let est = correlation_estimate(&[goe(50, 1)], &sc, 3, 0.0, 0.05, &pair_grid()).unwrap();
    assert!(est.insufficient_statistics);
    assert!(est.values.iter().all(|v| *v >= 0.0));
    assert!(correlation_estimate(&[goe(50, 1)], &sc, 4, 0.0, 0.05, &pair_grid()).is_err());
}

#[test]
fn observable_examples() {
    let x: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
    let j: Vec<usize> = (3..=12).collect();
    assert!((observable_g(&x, &j, &[1], |_| 1.0).unwrap() - 0.5).abs() < 1e-15);
    // N (x_i - x_{i+1}) = -1 for every i: the indicator of |gap| <= 1 counts all.
    let v = observable_g(&x, &j, &[1], |a| if a[0].abs() <= 1.0 + 1e-12 { 1.0 } else { 0.0 }).unwrap();
    assert!((v - 10.0 / 20.0).abs() < 1e-15);
    // Terms with i + m beyond N vanish.
    let v = observable_g(&x, &[19, 20], &[1], |_| 1.0).unwrap();
    assert!((v - 1.0 / 20.0).abs() < 1e-15);
}

#[test]
fn observable_a_a_test() {
    let n = 200;
    let j: Vec<usize> = (n / 4..=3 * n / 4).collect();
    let g = |a: &[f64]| (-(a[0] * a[0]) / 4.0).exp() + 0.5 * (-(a[1] * a[1]) / 9.0).exp();
    let values = |offset: u64| -> Vec<f64> {
        (0..100).map(|s| observable_g(gue(n, s + offset).values(), &j, &[1, 2], g).unwrap()).collect()
    };
    let (a, b) = (values(10_000), values(20_000));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let sigma = (var(&a) / a.len() as f64 + var(&b) / b.len() as f64).sqrt();
    assert!((mean(&a) - mean(&b)).abs() <= 2.0 * sigma, "{} vs {} (sigma {sigma})", mean(&a), mean(&b));
}

#[test]
fn counting_tail_examples() {
    let samples: Vec<Vec<f64>> = (0..50)
        .map(|s| {
            spectrum(
                &sample(&EnsembleSpec::covariance(EnsembleKind::CovarianceReal, 500, 1000, EntryDist::Gaussian, s))
                    .unwrap(),
            )
            .unwrap()
            .eigenvalues()
        })
        .collect();
    let k_grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let outside = counting_tail(&samples, (5.0, 6.0), &k_grid).unwrap();
    assert_eq!(outside[0], 1.0);
    assert!(outside[1..].iter().all(|&p| p == 0.0));
    let width = 10.0 / 500.0;
    let tail = counting_tail(&samples, (1.0 - width / 2.0, 1.0 + width / 2.0), &k_grid).unwrap();
    assert_eq!(tail[0], 1.0);
    assert!(tail[4] < 1e-2, "{tail:?}");
    assert!(tail.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn ks_two_sample_quantile() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 200;
    let mut exceed = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        if ks_two_sample(&a, &b).unwrap() > 0.027 {
            exceed += 1;
        }
    }
    // At most 1% exceedances are expected; allow binomial slack.
    assert!(exceed <= 6, "{exceed} exceedances");
    let c = ks_critical_value(10_000, 10_000, 0.01);
    assert!(c < 0.027 && c > 0.02, "{c}");
}

#[test]
fn ks_trivial_cases() {
    let a = [0.3, 0.1, 0.7];
    assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    assert_eq!(ks_two_sample(&a, &[2.0, 3.0]).unwrap(), 1.0);
    assert!(matches!(ks_two_sample(&a, &[]), Err(RmtError::EmptyInput(_))));
}

/// Brute-force distance over every sample point.
fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |v: &[f64], t: f64| v.iter().filter(|&&x| x <= t).count() as f64 / v.len() as f64;
    a.iter().chain(b).map(|&t| (cdf(a, t) - cdf(b, t)).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_matches_brute_force(a in prop::collection::vec(-5i32..5, 1..30), b in prop::collection::vec(-5i32..5, 1..30)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let d = ks_two_sample(&a, &b).unwrap();
        prop_assert!((d - ks_oracle(&a, &b)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn lambda_is_monotone_and_local(seed in any::<u64>(), n in 20usize..120) {
        let sc = DensityModel::semicircle();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        x.sort_by(f64::total_cmp);
        let grid = s_grid();
        let (e, ell) = (0.1, 0.4);
        let base = gap_statistics_scaled(&x, n, &sc, e, ell, &grid).unwrap();
        prop_assert_eq!(base.lambda_curve[0], 0.0);
        prop_assert!(base.lambda_curve.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(base.rescaled_gaps.iter().all(|g| *g >= 0.0));
        // Points added below the window or above every existing point.
        let mut y = x.clone();
        y.extend((0..5).map(|k| -1.6 - k as f64 * 0.01));
        y.extend((0..5).map(|k| 1.6 + k as f64 * 0.01));
        y.sort_by(f64::total_cmp);
        let more = gap_statistics_scaled(&y, n, &sc, e, ell, &grid).unwrap();
        prop_assert_eq!(base.lambda_curve, more.lambda_curve);
    }

    #[test]
    fn observable_is_translation_invariant(ticks in prop::collection::btree_set(-4096i64..4096, 5..40), shift in -1024i64..1024) {
        // Dyadic points keep the translation exact in floating point.
        let x: Vec<f64> = ticks.iter().map(|&k| k as f64 / 1024.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v + shift as f64 / 1024.0).collect();
        let j: Vec<usize> = (1..=x.len()).collect();
        let g = |a: &[f64]| (-a[0].abs()).exp() * a[1].cos();
        prop_assert_eq!(observable_g(&x, &j, &[1, 2], g).unwrap(), observable_g(&y, &j, &[1, 2], g).unwrap());
    }
}
