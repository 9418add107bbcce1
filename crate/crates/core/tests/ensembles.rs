use faer::c64;
use proptest::prelude::*;
use rmt_core::density::DensityModel;
use rmt_core::ensembles::{
    eigen_residual, minor_spectrum, ou_interpolate, sample, spectrum, EnsembleKind, EnsembleSpec, EntryDist,
    MatrixData, MatrixSample,
};
use rmt_core::statistics::ks_against_cdf;

fn entry(s: &MatrixSample, i: usize, j: usize) -> c64 {
    match &s.data {
        MatrixData::Real(m) => c64::new(m[(i, j)], 0.0),
        MatrixData::Complex(m) => m[(i, j)],
    }
}

#[test]
fn off_diagonal_variance_matches_normalization() {
    let n = 50;
    let draws = 100_000;
    let mut acc = 0.0;
    for seed in 0..draws {
        let s = sample(&EnsembleSpec::wigner(EnsembleKind::WignerSymmetric, n, EntryDist::Gaussian, seed)).unwrap();
        acc += entry(&s, 0, 1).re.powi(2);
    }
    let mean = acc / draws as f64;
    assert!((mean - 1.0 / n as f64).abs() <= 3e-4, "mean {mean}");
}

#[test]
fn entry_variances_per_kind_and_distribution() {
    // Pool every entry of twenty samples; the diagonal estimate has about 3%
    // relative standard error.
    let n = 200;
    for dist in [EntryDist::Gaussian, EntryDist::Rademacher, EntryDist::Uniform] {
        for (kind, comp, diag) in [
            (EnsembleKind::WignerSymmetric, 1.0, 2.0),
            (EnsembleKind::WignerHermitian, 0.5, 1.0),
            (EnsembleKind::WignerQuaternion, 0.25, 0.5),
        ] {
            let dim = if kind == EnsembleKind::WignerQuaternion { 2 * n } else { n };
            let (mut off, mut off_count, mut on, mut on_count) = (0.0, 0.0, 0.0, 0.0);
            for seed in 0..20 {
                let s = sample(&EnsembleSpec::wigner(kind, n, dist, seed)).unwrap();
                for i in 0..dim {
                    for j in 0..dim {
                        let z = entry(&s, i, j);
                        if i == j {
                            on += z.re * z.re;
                            on_count += 1.0;
                        } else if kind != EnsembleKind::WignerQuaternion || i / 2 != j / 2 {
                            off += z.re * z.re;
                            off_count += 1.0;
                        }
                    }
                }
            }
            let off = off / off_count * n as f64;
            let on = on / on_count * n as f64;
            assert!((off - comp).abs() < 0.02 * comp, "{kind:?} {dist:?} off {off}");
            assert!((on - diag).abs() < 0.1 * diag, "{kind:?} {dist:?} diag {on}");
        }
        for (kind, comp) in [(EnsembleKind::CovarianceReal, 1.0), (EnsembleKind::CovarianceComplex, 0.5)] {
            let (nn, m) = (150, 300);
            let s = sample(&EnsembleSpec::covariance(kind, nn, m, dist, 2)).unwrap();
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..nn {
                    acc += entry(&s, i, j).re.powi(2);
                }
            }
            let v = acc / (m * nn) as f64 * m as f64;
            assert!((v - comp).abs() < 0.02 * comp, "{kind:?} {dist:?} {v}");
        }
    }
}

#[test]
fn seed_determinism_is_bitwise() {
    for kind in [EnsembleKind::WignerHermitian, EnsembleKind::WignerQuaternion] {
        let spec = EnsembleSpec::wigner(kind, 30, EntryDist::Uniform, 77);
        assert_eq!(sample(&spec).unwrap(), sample(&spec).unwrap());
        assert_ne!(sample(&spec).unwrap(), sample(&spec.with_seed(78)).unwrap());
    }
    let spec = EnsembleSpec::covariance(EnsembleKind::CovarianceReal, 10, 30, EntryDist::Rademacher, 5);
    assert_eq!(sample(&spec).unwrap(), sample(&spec).unwrap());
}

#[test]
fn goe_eigenvalues_stay_in_support() {
    let mut inside = 0usize;
    let mut total = 0usize;
    for seed in 0..20 {
        let s = sample(&EnsembleSpec::wigner(EnsembleKind::WignerSymmetric, 500, EntryDist::Gaussian, seed)).unwrap();
        let sp = spectrum(&s).unwrap();
        inside += sp.values().iter().filter(|v| v.abs() <= 2.0).count();
        total += sp.len();
    }
    assert!(inside as f64 / total as f64 >= 0.99);
}

#[test]
fn eigen_residuals_are_tiny() {
    for (spec, tol) in [
        (EnsembleSpec::wigner(EnsembleKind::WignerSymmetric, 120, EntryDist::Gaussian, 3), 1e-10),
        (EnsembleSpec::wigner(EnsembleKind::WignerHermitian, 120, EntryDist::Rademacher, 3), 1e-10),
        (EnsembleSpec::wigner(EnsembleKind::WignerQuaternion, 60, EntryDist::Uniform, 3), 1e-10),
        (EnsembleSpec::covariance(EnsembleKind::CovarianceComplex, 60, 120, EntryDist::Gaussian, 3), 1e-10),
    ] {
        let r = eigen_residual(&sample(&spec).unwrap()).unwrap();
        assert!(r <= tol, "{:?}: {r}", spec.kind);
    }
}

#[test]
fn interlacing_of_minors() {
    let mut violations = 0;
    for seed in 0..50 {
        let s =
            sample(&EnsembleSpec::covariance(EnsembleKind::CovarianceReal, 20, 40, EntryDist::Gaussian, seed)).unwrap();
        let parent = spectrum(&s).unwrap().eigenvalues();
        for drop in [1, 7, 20] {
            let minor = minor_spectrum(&s, drop).unwrap().eigenvalues();
            let scale = parent[parent.len() - 1];
            for (k, mu) in minor.iter().enumerate() {
                if *mu < parent[k] - 1e-10 * scale || *mu > parent[k + 1] + 1e-10 * scale {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn ou_preserves_entry_variance() {
    // 10^4 draws of a small hermitian matrix; off-diagonal real part has
    // variance 1/(2N) at every time for a Gaussian start.
    let n = 4;
    let draws = 10_000;
    for t in [0.0, 0.5, 50.0] {
        let mut acc = 0.0;
        for seed in 0..draws {
            let s =
                sample(&EnsembleSpec::wigner(EnsembleKind::WignerHermitian, n, EntryDist::Rademacher, seed)).unwrap();
            let o = ou_interpolate(&s, t, seed + 1_000_000).unwrap();
            acc += entry(&o, 0, 1).re.powi(2) + entry(&o, 1, 2).re.powi(2) + entry(&o, 2, 3).im.powi(2);
        }
        let v = acc / (3.0 * draws as f64) * (2.0 * n as f64);
        assert!((v - 1.0).abs() < 0.03, "t={t}: normalized variance {v}");
    }
}

#[test]
fn ou_at_large_time_forgets_the_start() {
    // Rademacher entries have fourth moment 1 (relative); Gaussian have 3.
    let draws = 10_000;
    let mut m4 = 0.0;
    let mut m2 = 0.0;
    for seed in 0..draws {
        let s = sample(&EnsembleSpec::wigner(EnsembleKind::WignerSymmetric, 3, EntryDist::Rademacher, seed)).unwrap();
        let o = ou_interpolate(&s, 50.0, seed + 7).unwrap();
        let x = entry(&o, 0, 1).re * 3f64.sqrt();
        m2 += x * x;
        m4 += x.powi(4);
    }
    let (m2, m4) = (m2 / draws as f64, m4 / draws as f64);
    assert!((m2 - 1.0).abs() < 0.03, "{m2}");
    assert!((m4 / (m2 * m2) - 3.0).abs() < 0.25, "kurtosis {}", m4 / (m2 * m2));
}

#[test]
fn empirical_distribution_matches_limit_laws() {
    let sc = DensityModel::semicircle();
    for kind in [EnsembleKind::WignerSymmetric, EnsembleKind::WignerHermitian] {
        let mut total = 0.0;
        for seed in 0..20 {
            let sp = spectrum(&sample(&EnsembleSpec::wigner(kind, 500, EntryDist::Gaussian, seed)).unwrap()).unwrap();
            total += ks_against_cdf(sp.values(), |x| sc.cdf(x)).unwrap();
        }
        assert!(total / 20.0 <= 0.02, "{kind:?} {}", total / 20.0);
    }
    let mp = DensityModel::marchenko_pastur(0.5).unwrap();
    for kind in [EnsembleKind::CovarianceReal, EnsembleKind::CovarianceComplex] {
        let mut total = 0.0;
        for seed in 0..20 {
            let sp = spectrum(&sample(&EnsembleSpec::covariance(kind, 250, 500, EntryDist::Gaussian, seed)).unwrap())
                .unwrap();
            total += ks_against_cdf(&sp.eigenvalues(), |x| mp.cdf(x)).unwrap();
        }
        assert!(total / 20.0 <= 0.02, "{kind:?} {}", total / 20.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structure_and_ordering_hold(
        n in 1usize..12,
        seed in any::<u64>(),
        kind_ix in 0usize..3,
        dist_ix in 0usize..3,
        t in 0.0f64..3.0,
    ) {
        let kind = [EnsembleKind::WignerSymmetric, EnsembleKind::WignerHermitian, EnsembleKind::WignerQuaternion][kind_ix];
        let dist = [EntryDist::Gaussian, EntryDist::Rademacher, EntryDist::Uniform][dist_ix];
        let s = sample(&EnsembleSpec::wigner(kind, n, dist, seed)).unwrap();
        prop_assert_eq!(s.structure_residual(), 0.0);
        let o = ou_interpolate(&s, t, seed ^ 0xabc).unwrap();
        prop_assert_eq!(o.structure_residual(), 0.0);
        let sp = spectrum(&o).unwrap();
        prop_assert_eq!(sp.len(), n);
        prop_assert!(sp.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn minors_interlace(n in 1usize..10, extra in 1usize..10, seed in any::<u64>(), complex in any::<bool>()) {
        let kind = if complex { EnsembleKind::CovarianceComplex } else { EnsembleKind::CovarianceReal };
        let s = sample(&EnsembleSpec::covariance(kind, n, n + extra, EntryDist::Uniform, seed)).unwrap();
        let parent = spectrum(&s).unwrap();
        prop_assert!(parent.values().iter().all(|&v| v >= 0.0));
        let parent = parent.eigenvalues();
        let tol = 1e-10 * parent[n - 1].max(1.0);
        for drop in 1..=n {
            let minor = minor_spectrum(&s, drop).unwrap().eigenvalues();
            prop_assert_eq!(minor.len(), n - 1);
            for (k, mu) in minor.iter().enumerate() {
                prop_assert!(*mu >= parent[k] - tol && *mu <= parent[k + 1] + tol);
            }
        }
    }
}
