use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmt_core::relaxation1d::{
    fit_decay_rate, fokker_planck_gap, ou_evolve, ou_evolve_with_step, reverse_heat_flow,
    reverse_heat_flow_with_cutoff, GapConfig, GapProblem, GridDensity,
};
use rmt_core::RmtError;

fn bimodal(points: usize) -> GridDensity {
    let g = GridDensity::from_fn(1.0, 8.0, points, |x| {
        let p = (-(x - 1.5) * (x - 1.5) / 0.5).exp() + 0.6 * (-(x + 1.2) * (x + 1.2) / 0.3).exp();
        p * (0.5 * x * x).exp()
    })
    .unwrap();
    g.normalized().unwrap()
}

/// Smooth perturbation of the reference with features on the unit scale.
fn smooth_family() -> GridDensity {
    GridDensity::default_grid(1.0, |x| 1.0 + 0.2 * (1.0 + 0.5 * x) * (-0.5 * x * x).exp())
        .unwrap()
        .normalized()
        .unwrap()
}

fn loglog_slope(ts: &[f64], errs: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    cov / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

#[test]
fn reference_is_stationary() {
    let u = GridDensity::default_grid(1.0, |_| 1.0).unwrap().normalized().unwrap();
    let v = ou_evolve(&u, 1.0).unwrap();
    let dev = v.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev <= 1e-10, "{dev}");
    assert_eq!(ou_evolve(&u, 0.0).unwrap(), u);
    assert!(ou_evolve(&u, -1.0).is_err());
}

#[test]
fn first_hermite_mode_decays_at_rate_one_half() {
    let eps = 1e-2;
    let u = GridDensity::default_grid(1.0, |x| 1.0 + eps * x).unwrap();
    let t = 1.0;
    let v = ou_evolve(&u, t).unwrap();
    // The walls at +-8 are reached from |x| <= 4 with negligible probability.
    let mut worst: f64 = 0.0;
    for i in 0..v.len() {
        let x = v.x(i);
        if x.abs() <= 4.0 {
            worst = worst.max((v.values()[i] - (1.0 + eps * x * (-t / 2.0).exp())).abs());
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn bimodal_matches_fine_grid() {
    // 4 * 4095 + 1 nodes nest the default grid inside the oracle grid.
    let coarse = ou_evolve(&bimodal(4096), 0.7).unwrap();
    let fine = ou_evolve_with_step(&bimodal(16381), 0.7, 2.5e-4).unwrap();
    let w = coarse.weights();
    let l1: f64 = (0..coarse.len()).map(|i| w[i] * (coarse.values()[i] - fine.values()[4 * i]).abs()).sum();
    assert!(l1 <= 1e-5, "{l1}");
    // The variance relaxes toward the reference value 1.
    let (_, v0) = bimodal(4096).moments();
    let (_, v1) = coarse.moments();
    let expected = 1.0 + (v0 - 1.0) * (-0.7f64).exp();
    assert!((v1 - expected).abs() < 1e-4, "{v1} vs {expected}");
}

#[test]
fn ou_grid_convergence() {
    // Halving h moves the L1 distance by at most four times its tolerance.
    let a = ou_evolve(&bimodal(2048), 0.7).unwrap();
    let b = ou_evolve(&bimodal(4095), 0.7).unwrap();
    let w = a.weights();
    let l1: f64 = (0..a.len()).map(|i| w[i] * (a.values()[i] - b.values()[2 * i]).abs()).sum();
    assert!(l1 <= 4e-5, "{l1}");
}

#[test]
fn ou_conserves_mass() {
    for u in [bimodal(4096), smooth_family()] {
        for t in [0.01, 0.3, 2.0] {
            let v = ou_evolve(&u, t).unwrap();
            assert!((v.mass() - 1.0).abs() <= 1e-8, "{}", v.mass());
            assert!(v.values().iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn reverse_flow_trivial_cases() {
    let u = bimodal(4096);
    assert_eq!(reverse_heat_flow(&u, 0.0, 3).unwrap(), u.normalized().unwrap());
    let one = GridDensity::default_grid(1.0, |_| 1.0).unwrap().normalized().unwrap();
    let g = reverse_heat_flow(&one, 0.05, 3).unwrap();
    let dev = g.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-12, "{dev}");
}

#[test]
fn reverse_flow_moments_are_pulled_back() {
    let u = smooth_family();
    let t = 0.05;
    let g = reverse_heat_flow(&u, t, 2).unwrap();
    let (mu, vu) = u.moments();
    let (mg, vg) = g.moments();
    assert!((mg - mu * (t / 2.0).exp()).abs() < 1e-9);
    assert!((vg - (1.0 + (vu - 1.0) * t.exp())).abs() < 1e-9);
    assert!((g.mass() - 1.0).abs() < 1e-12);
}

#[test]
fn reverse_flow_rejects_loss_of_positivity() {
    let u = GridDensity::default_grid(1.0, |x| 1.0 - 0.9 * (-x * x / (2.0 * 0.05 * 0.05)).exp()).unwrap();
    match reverse_heat_flow(&u, 0.1, 2) {
        Err(RmtError::Domain(msg)) => assert!(msg.contains("smaller t")),
        other => panic!("expected a domain error, got {other:?}"),
    }
}

#[test]
fn reverse_flow_order_without_truncation() {
    // With the cutoff pushed past the grid the series itself is tested.
    let u = smooth_family();
    let ts = [0.02, 0.04, 0.08];
    for k in 1..=3usize {
        let errs: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let g = reverse_heat_flow_with_cutoff(&u, t, k, 1.0).unwrap();
                ou_evolve(&g, t).unwrap().l1_distance(&u).unwrap()
            })
            .collect();
        let slope = loglog_slope(&ts, &errs);
        assert!(slope >= k as f64 - 0.2, "K = {k}: slope {slope} ({errs:?})");
    }
}

#[test]
fn reverse_flow_improves_on_identity() {
    let u = smooth_family();
    for t in [0.02, 0.05] {
        let plain = ou_evolve(&u, t).unwrap().l1_distance(&u).unwrap();
        let g = reverse_heat_flow(&u, t, 2).unwrap();
        let corrected = ou_evolve(&g, t).unwrap().l1_distance(&u).unwrap();
        assert!(corrected < 0.5 * plain, "t = {t}: {corrected} vs {plain}");
    }
}

fn gap_config(beta: f64, r: f64) -> GapConfig {
    GapConfig { beta, r, gamma_gap: 2.0, cells: 4000, u_max: None, dt: 1e-3 }
}

fn shifted_bump(p: &GapProblem, r: f64) -> Vec<f64> {
    p.centers().iter().map(|&u| (-(u - 2.0 - r).powi(2) / (0.5 * r * r)).exp() + 1e-3).collect()
}

fn time_grid() -> Vec<f64> {
    (0..=300).map(|i| i as f64 * 0.01).collect()
}

#[test]
fn equilibrium_has_zero_entropy() {
    let p = GapProblem::new(gap_config(1.0, 0.5)).unwrap();
    let c = p.solve(&vec![1.0; p.centers().len()], &time_grid()[..50]).unwrap();
    assert!(c.entropy.iter().all(|s| s.abs() <= 1e-20));
    assert!(c.dirichlet.iter().all(|d| d.abs() <= 1e-20));
}

#[test]
fn entropy_decays_and_dissipates() {
    for beta in [1.0, 2.0] {
        for r in [0.25, 0.5] {
            let p = GapProblem::new(gap_config(beta, r)).unwrap();
            let c = p.solve(&shifted_bump(&p, r), &time_grid()).unwrap();
            for k in 1..c.t.len() {
                assert!(c.entropy[k] <= c.entropy[k - 1] + 1e-9);
                assert!((c.mass[k] - 1.0).abs() <= 1e-8);
                assert!(c.entropy[k].is_finite() && c.dirichlet[k].is_finite());
                if c.entropy[k] > 1e-10 * c.entropy[0] {
                    let dsdt = (c.entropy[k] - c.entropy[k - 1]) / (c.t[k] - c.t[k - 1]);
                    let d = 0.5 * (c.dirichlet[k] + c.dirichlet[k - 1]);
                    assert!(dsdt <= -0.95 * d, "beta {beta} R {r} t {}: {dsdt} vs {d}", c.t[k]);
                }
            }
        }
    }
}

#[test]
fn decay_rate_scales_with_inverse_square_of_r() {
    let rate = |r: f64| {
        let p = GapProblem::new(gap_config(1.0, r)).unwrap();
        fit_decay_rate(&p.solve(&shifted_bump(&p, r), &time_grid()).unwrap()).unwrap()
    };
    let (slow, fast) = (rate(0.5), rate(0.25));
    assert!(fast >= 3.0 * slow, "{fast} vs {slow}");
}

#[test]
fn log_sobolev_with_bakry_emery_constant() {
    // Phi'' >= 1/R^2 gives S(q) <= 4 R^2 D(sqrt q).
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for r in [0.25, 0.5, 1.0] {
        let p = GapProblem::new(gap_config(1.0, r)).unwrap();
        let mut fitted: f64 = 0.0;
        for _ in 0..50 {
            let (a, c, w) = (rng.random_range(0.2..3.0), rng.random_range(1.0..3.5), rng.random_range(0.05..1.0));
            let b = rng.random_range(-1.0..1.0);
            let q: Vec<f64> = p
                .centers()
                .iter()
                .map(|&u| (a * (-(u - c).powi(2) / (2.0 * w * w)).exp() + b * (u - 2.0) / (1.0 + u * u)).exp())
                .collect();
            let q = p.normalize(&q).unwrap();
            fitted = fitted.max(p.entropy(&q) / (r * r * p.dirichlet_sqrt(&q)));
        }
        assert!(fitted <= 4.0, "R = {r}: fitted constant {fitted}");
    }
}

#[test]
fn gap_grid_must_resolve_the_boundary_layer() {
    let mut cfg = gap_config(1.0, 0.25);
    cfg.cells = 100;
    assert!(matches!(GapProblem::new(cfg), Err(RmtError::GridTooCoarse { .. })));
    let mut cfg = gap_config(4.0, 0.5);
    cfg.cells = 200;
    assert!(matches!(fokker_planck_gap(cfg, &[1.0; 200], &[0.0]), Err(RmtError::GridTooCoarse { .. })));
}

#[test]
fn gap_grid_convergence() {
    let run = |cells: usize| {
        let mut cfg = gap_config(1.0, 0.5);
        cfg.cells = cells;
        let p = GapProblem::new(cfg).unwrap();
        let c = p.solve(&shifted_bump(&p, 0.5), &time_grid()).unwrap();
        (fit_decay_rate(&c).unwrap(), c.entropy[20])
    };
    let (r1, s1) = run(2000);
    let (r2, s2) = run(4000);
    assert!((r1 - r2).abs() <= 4e-3 * r2, "{r1} vs {r2}");
    assert!((s1 - s2).abs() <= 4e-3 * s2, "{s1} vs {s2}");
}

#[test]
fn entropy_csv_layout() {
    let p = GapProblem::new(gap_config(1.0, 0.5)).unwrap();
    let c = p.solve(&shifted_bump(&p, 0.5), &[0.0, 0.1]).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,S,D");
    assert_eq!(lines.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ou_keeps_mass_and_sign(a in 0.1f64..2.0, c in -2.0f64..2.0, w in 0.2f64..1.5, t in 0.0f64..1.5) {
        let u = GridDensity::from_fn(1.0, 8.0, 1025, |x| 0.05 + a * (-(x - c).powi(2) / (2.0 * w * w)).exp())
            .unwrap()
            .normalized()
            .unwrap();
        let v = ou_evolve(&u, t).unwrap();
        prop_assert!((v.mass() - 1.0).abs() <= 1e-8);
        prop_assert!(v.values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn gap_flow_keeps_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = GapProblem::new(GapConfig { beta: 1.0, r: 0.5, gamma_gap: 2.0, cells: 600, u_max: None, dt: 2e-3 }).unwrap();
        let q: Vec<f64> = (0..600).map(|_| rng.random_range(0.1..2.0)).collect();
        let c = p.solve(&q, &[0.0, 0.05, 0.2, 1.0]).unwrap();
        for k in 0..c.t.len() {
            prop_assert!((c.mass[k] - 1.0).abs() <= 1e-8);
            if k > 0 {
                prop_assert!(c.entropy[k] <= c.entropy[k - 1] + 1e-9);
            }
        }
    }
}
