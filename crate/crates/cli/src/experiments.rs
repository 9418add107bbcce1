//! The named experiments. Each one maps every seed to its rows in parallel,
//! then reduces in seed order, so the output never depends on scheduling.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use rmt_core::density::{empirical_stieltjes, DensityModel};
use rmt_core::dynamics::{rigidity_q, run_flow, FlowKind};
use rmt_core::ensembles::{ou_interpolate, sample, spectrum, EntryDist, SpectralPoints, SpectrumKind};
use rmt_core::gibbs::{
    convexity_rhs, hessian_quadratic_form, relaxation_form, relaxation_rhs, HamiltonianSpec, PseudoPotential,
};
use rmt_core::relaxation1d::{fit_decay_rate, ou_evolve, reverse_heat_flow_with_cutoff, GapProblem, GridDensity};
use rmt_core::rng::{stream_rng, STREAM_AUX};
use rmt_core::statistics::{
    correlation_estimate, counting_tail, default_window, gap_statistics_scaled, ks_against_cdf, CorrelationGrid,
};
use rmt_core::RmtError;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{SeedRecord, Table};
use crate::row;

/// Tolerated negative slack in the Hessian audit, relative to `max(|form|, 1)`.
pub const AUDIT_SLACK: f64 = -1e-12;

pub struct Output {
    pub results: Table,
    pub aggregate: Option<Table>,
    pub metrics: Value,
    pub provenance: Vec<SeedRecord>,
}

type Rows = Vec<Vec<String>>;

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    match cfg.experiment {
        Experiment::Semicircle | Experiment::MpLaw => global_law(cfg, pool),
        Experiment::LocalLaw => local_law(cfg, pool),
        Experiment::Rigidity => rigidity(cfg, pool),
        Experiment::DbmRelax => dbm_relax(cfg, pool),
        Experiment::Gaps => gaps(cfg, pool),
        Experiment::Correlations => correlations(cfg, pool),
        Experiment::CountingTail => counting(cfg, pool),
        Experiment::ReverseFlow => reverse_flow(cfg),
        Experiment::EntropyDecay => entropy_decay(cfg),
        Experiment::HessianAudit => hessian_audit(cfg, pool),
    }
}

/// Evaluate `f` on every seed; results come back in seed order and the first
/// failing seed (in that order) is reported.
fn sweep<T, F>(cfg: &ExperimentConfig, pool: &ThreadPool, f: F) -> CliResult<Vec<(u64, T)>>
where
    T: Send,
    F: Fn(u64) -> CliResult<T> + Sync,
{
    let seeds = cfg.seed_list();
    let out: Vec<CliResult<T>> = pool.install(|| seeds.par_iter().map(|&s| f(s)).collect());
    seeds.into_iter().zip(out).map(|(s, r)| r.map(|t| (s, t))).collect()
}

/// Concatenate per-seed rows into the results table.
fn collect_rows<T>(header: &[&str], per_seed: &[(u64, T)], rows: impl Fn(&T) -> &Rows) -> (Table, Vec<SeedRecord>) {
    let mut table = Table::new(header);
    let mut provenance = Vec::with_capacity(per_seed.len());
    for (seed, t) in per_seed {
        let r = rows(t);
        provenance.push(SeedRecord { seed: *seed, rows: r.len() });
        for row in r {
            table.push(row.clone());
        }
    }
    (table, provenance)
}

fn seed_cols(cfg: &ExperimentConfig) -> [String; 2] {
    let seeds = cfg.seed_list();
    [seeds[0].to_string(), seeds.len().to_string()]
}

fn at(seed: u64) -> impl Fn(RmtError) -> CliError {
    move |e| CliError::at_seed(seed, e)
}

/// Spectrum of one sample, after the optional Ornstein-Uhlenbeck smoothing.
fn draw(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<SpectralPoints, RmtError> {
    let mut m = sample(&cfg.ensemble_spec(n, seed))?;
    if let Some(tau) = cfg.ensemble.tau.filter(|&t| t > 0.0) {
        m = ou_interpolate(&m, tau, seed)?;
    }
    spectrum(&m)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn stderr(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Nearest-rank percentile.
fn percentile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Values of `key` across seeds, for each size.
fn by_size<T>(cfg: &ExperimentConfig, per_seed: &[(u64, Vec<T>)], key: impl Fn(&T) -> f64) -> Vec<Vec<f64>> {
    (0..cfg.sizes().len()).map(|i| per_seed.iter().map(|(_, v)| key(&v[i])).collect()).collect()
}

struct GlobalSeed {
    rows: Rows,
    ks: Vec<f64>,
    hist: Vec<Vec<u64>>,
}

fn global_law(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let (lo, hi) = model.support();
    let bins = cfg.statistics.bins.unwrap_or(40);
    let width = (hi - lo) / bins as f64;
    let per_seed = sweep(cfg, pool, |seed| {
        let mut out = GlobalSeed { rows: Vec::new(), ks: Vec::new(), hist: Vec::new() };
        for &n in cfg.sizes() {
            let ev = draw(cfg, n, seed).map_err(at(seed))?.eigenvalues();
            let ks = ks_against_cdf(&ev, |x| model.cdf(x)).map_err(at(seed))?;
            let mut hist = vec![0u64; bins];
            let mut outside = 0usize;
            for &x in &ev {
                let k = ((x - lo) / width).floor();
                if k >= 0.0 && (k as usize) < bins {
                    hist[k as usize] += 1;
                } else {
                    outside += 1;
                }
            }
            out.rows.push(row![seed, n, ks, outside]);
            out.ks.push(ks);
            out.hist.push(hist);
        }
        Ok(out)
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "ks", "outside_support"], &per_seed, |s| &s.rows);
    let mut aggregate =
        Table::new(&["seed_base", "seed_count", "n", "x_lo", "x_hi", "empirical_density", "limit_density"]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    let mut all_ks = Vec::new();
    for (i, &n) in cfg.sizes().iter().enumerate() {
        let ks: Vec<f64> = per_seed.iter().map(|(_, s)| s.ks[i]).collect();
        let total = (n * per_seed.len()) as f64;
        for b in 0..bins {
            let (a, c) = (lo + width * b as f64, lo + width * (b + 1) as f64);
            let hits: u64 = per_seed.iter().map(|(_, s)| s.hist[i][b]).sum();
            let limit = (model.cdf(c) - model.cdf(a)) / width;
            aggregate.push(row![&base, &count, n, a, c, hits as f64 / (total * width), limit]);
        }
        per_n.push(json!({
            "n": n,
            "ks_mean": mean(&ks),
            "ks_max": ks.iter().cloned().fold(0.0, f64::max),
        }));
        all_ks.extend(ks);
    }
    let metrics = json!({
        "ks_mean": mean(&all_ks),
        "ks_max": all_ks.iter().cloned().fold(0.0, f64::max),
        "support": [lo, hi],
        "per_n": per_n,
    });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn local_law(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let s = &cfg.statistics;
    let (e, exponent, tol) = (s.e.unwrap_or(1.5), s.eta_exponent.unwrap_or(0.8), s.tolerance.unwrap_or(0.1));
    let points: Vec<(Complex64, Complex64)> = cfg
        .sizes()
        .iter()
        .map(|&n| {
            let z = Complex64::new(e, (n as f64).powf(-exponent));
            model.stieltjes_mw(z).map(|m| (z, m.value)).map_err(|err| CliError::Config(err.to_string()))
        })
        .collect::<CliResult<_>>()?;
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for (&n, &(z, mw)) in cfg.sizes().iter().zip(&points) {
            let sp = draw(cfg, n, seed).map_err(at(seed))?;
            let m = empirical_stieltjes(&sp, z).map_err(at(seed))?.value;
            let err = (m - mw).norm();
            rows.push(row![seed, n, z.im, m.re, m.im, err]);
            errors.push(err);
        }
        Ok((rows, errors))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "eta", "re_m_n", "im_m_n", "error"], &per_seed, |(r, _)| r);
    let mut aggregate = Table::new(&[
        "seed_base",
        "seed_count",
        "n",
        "eta",
        "re_m_w",
        "im_m_w",
        "mean_error",
        "p95_error",
        "fraction_within",
    ]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    for (i, (&n, &(z, mw))) in cfg.sizes().iter().zip(&points).enumerate() {
        let errs: Vec<f64> = per_seed.iter().map(|(_, (_, e))| e[i]).collect();
        let within = errs.iter().filter(|&&x| x <= tol).count() as f64 / errs.len() as f64;
        let p95 = percentile(&errs, 0.95);
        aggregate.push(row![&base, &count, n, z.im, mw.re, mw.im, mean(&errs), p95, within]);
        per_n.push(
            json!({ "n": n, "eta": z.im, "mean_error": mean(&errs), "p95_error": p95, "fraction_within": within }),
        );
    }
    let metrics = json!({ "e": e, "eta_exponent": exponent, "tolerance": tol, "per_n": per_n });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn rigidity(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let gammas: Vec<Vec<f64>> = cfg
        .sizes()
        .iter()
        .map(|&n| model.classical_locations(n).map_err(|e| CliError::Config(e.to_string())))
        .collect::<CliResult<_>>()?;
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rows = Vec::new();
        let mut qs = Vec::new();
        for (&n, gamma) in cfg.sizes().iter().zip(&gammas) {
            let ev = draw(cfg, n, seed).map_err(at(seed))?.eigenvalues();
            let q = ev.iter().zip(gamma).map(|(l, g)| (l - g).powi(2)).sum::<f64>() / n as f64;
            rows.push(row![seed, n, q]);
            qs.push(q);
        }
        Ok((rows, qs))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "q"], &per_seed, |(r, _)| r);
    let qs: Vec<(u64, Vec<f64>)> = per_seed.into_iter().map(|(s, (_, q))| (s, q)).collect();
    let by_n = by_size(cfg, &qs, |&q| q);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "n", "q_hat", "q_stderr"]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    let mut means = Vec::new();
    for (&n, q) in cfg.sizes().iter().zip(&by_n) {
        aggregate.push(row![&base, &count, n, mean(q), stderr(q)]);
        per_n.push(json!({ "n": n, "q_hat": mean(q), "q_stderr": stderr(q) }));
        means.push(mean(q));
    }
    let ns: Vec<f64> = cfg.sizes().iter().map(|&n| n as f64).collect();
    let slope = (ns.len() >= 2).then(|| loglog_slope(&ns, &means));
    let metrics = json!({ "slope": slope, "per_n": per_n });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn dbm_relax(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let f = cfg.flow();
    let horizon = f.horizon.unwrap_or(1.0);
    let samples = f.samples.unwrap_or(10);
    let times: Vec<f64> = (0..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    let law = if cfg.kind().is_covariance() {
        DensityModel::mp_singular(cfg.ensemble.d.unwrap_or(0.5))
    } else {
        Ok(DensityModel::semicircle())
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let gammas: Vec<Vec<f64>> = cfg
        .sizes()
        .iter()
        .map(|&n| law.classical_locations(n).map_err(|e| CliError::Config(e.to_string())))
        .collect::<CliResult<_>>()?;
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rows = Vec::new();
        let mut curves = Vec::new();
        for (&n, gamma) in cfg.sizes().iter().zip(&gammas) {
            let x0 = draw(cfg, n, seed).map_err(at(seed))?;
            let flow = cfg.flow_config(seed, gamma.clone())?;
            let traj = run_flow(x0.values(), &flow, &times).map_err(at(seed))?;
            let q = rigidity_q(&traj, gamma).map_err(at(seed))?;
            for (t, qv) in traj.times.iter().zip(&q) {
                rows.push(row![seed, n, t, qv]);
            }
            curves.push(q);
        }
        Ok((rows, curves))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "t", "q"], &per_seed, |(r, _)| r);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "n", "t", "q_mean", "q_stderr"]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    for (i, &n) in cfg.sizes().iter().enumerate() {
        let mut q_means = Vec::new();
        for (k, t) in times.iter().enumerate() {
            let q: Vec<f64> = per_seed.iter().map(|(_, (_, c))| c[i][k]).collect();
            aggregate.push(row![&base, &count, n, t, mean(&q), stderr(&q)]);
            q_means.push(mean(&q));
        }
        per_n.push(json!({ "n": n, "q_initial": q_means[0], "q_final": q_means[q_means.len() - 1] }));
    }
    let drift = match cfg.flow_config(0, gammas[0].clone())?.kind {
        FlowKind::Dbm => "dbm",
        FlowKind::CovarianceFlow { .. } => "covariance-flow",
        FlowKind::LocalRelaxation { .. } => "local-relaxation",
    };
    let metrics = json!({ "drift": drift, "times": times, "per_n": per_n });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn gaps(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let s = &cfg.statistics;
    let e = s.e.unwrap_or(0.0);
    let s_grid = s.s_grid.clone().unwrap_or_default();
    let ell_of = |n: usize| s.ell.unwrap_or_else(|| default_window(n));
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rows = Vec::new();
        let mut stats = Vec::new();
        for &n in cfg.sizes() {
            let ev = draw(cfg, n, seed).map_err(at(seed))?.eigenvalues();
            let g = gap_statistics_scaled(&ev, n, &model, e, ell_of(n), &s_grid).map_err(at(seed))?;
            for (sv, l) in g.s_grid.iter().zip(&g.lambda_curve) {
                rows.push(row![seed, n, sv, l]);
            }
            stats.push(g);
        }
        Ok((rows, stats))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "s", "lambda"], &per_seed, |(r, _)| r);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "n", "s", "lambda_mean", "lambda_stderr"]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    for (i, &n) in cfg.sizes().iter().enumerate() {
        for (k, sv) in s_grid.iter().enumerate() {
            let l: Vec<f64> = per_seed.iter().map(|(_, (_, g))| g[i].lambda_curve[k]).collect();
            aggregate.push(row![&base, &count, n, sv, mean(&l), stderr(&l)]);
        }
        let pooled: Vec<f64> = per_seed.iter().flat_map(|(_, (_, g))| g[i].rescaled_gaps.iter().copied()).collect();
        per_n.push(json!({
            "n": n,
            "ell": ell_of(n),
            "rho_e": per_seed[0].1 .1[i].rho_e,
            "gap_count": pooled.len(),
            "mean_gap": if pooled.is_empty() { None } else { Some(mean(&pooled)) },
        }));
    }
    let metrics = json!({ "e": e, "per_n": per_n });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn correlations(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let s = &cfg.statistics;
    let (order, e, b) = (s.order.unwrap_or(2), s.e.unwrap_or(0.0), s.b.unwrap_or(0.05));
    let grid = CorrelationGrid {
        alpha_edges: s.alpha_edges.clone().unwrap_or_default(),
        separation_edges: if order > 1 { s.separation_edges.clone().unwrap_or_default() } else { Vec::new() },
    };
    let n = cfg.sizes()[0];
    let per_seed = sweep(cfg, pool, |seed| {
        let ev = draw(cfg, n, seed).map_err(at(seed))?.eigenvalues();
        let points = SpectralPoints::new(ev, SpectrumKind::Eigenvalues).map_err(at(seed))?;
        let single =
            correlation_estimate(std::slice::from_ref(&points), &model, order, e, b, &grid).map_err(at(seed))?;
        let rows = single.raw_counts.iter().enumerate().map(|(c, k)| row![seed, n, c, k]).collect();
        Ok((rows, points))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "cell", "count"], &per_seed, |(r, _)| r);
    let samples: Vec<SpectralPoints> = per_seed.into_iter().map(|(_, (_, p))| p).collect();
    let est = correlation_estimate(&samples, &model, order, e, b, &grid)
        .map_err(|err| CliError::at_seed(cfg.seed_list()[0], err))?;
    let mut header = vec!["seed_base", "seed_count", "n", "cell", "alpha_lo", "alpha_hi"];
    let sep_names = ["u2_lo", "u2_hi", "u3_lo", "u3_hi"];
    header.extend(&sep_names[..2 * (order - 1)]);
    header.extend(["value", "stderr", "count"]);
    let mut aggregate = Table::new(&header);
    let [base, count] = seed_cols(cfg);
    let sb = grid.separation_edges.len().saturating_sub(1);
    for c in 0..est.values.len() {
        let mut rest = c;
        let mut seps = Vec::new();
        for _ in 1..order {
            seps.push(rest % sb);
            rest /= sb;
        }
        let mut r = row![&base, &count, n, c, grid.alpha_edges[rest], grid.alpha_edges[rest + 1]];
        for k in seps {
            r.extend(row![grid.separation_edges[k], grid.separation_edges[k + 1]]);
        }
        r.extend(row![est.values[c], est.stderr[c], est.raw_counts[c]]);
        aggregate.push(r);
    }
    let metrics = json!({
        "order": order,
        "e": e,
        "b": b,
        "samples": est.samples,
        "cells": est.values.len(),
        "insufficient_statistics": est.insufficient_statistics,
    });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn counting(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let model = cfg.eigenvalue_model()?;
    let s = &cfg.statistics;
    let [a, b] = s.interval.unwrap_or([-0.05, 0.05]);
    let k_grid = s.k_grid.clone().unwrap_or_default();
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rows = Vec::new();
        let mut spectra = Vec::new();
        for &n in cfg.sizes() {
            let ev = draw(cfg, n, seed).map_err(at(seed))?.eigenvalues();
            let hits = ev.iter().filter(|&&v| v >= a && v <= b).count();
            rows.push(row![seed, n, hits]);
            spectra.push(ev);
        }
        Ok((rows, spectra))
    })?;
    let (results, provenance) = collect_rows(&["seed", "n", "count"], &per_seed, |(r, _)| r);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "n", "k", "tail"]);
    let [base, count] = seed_cols(cfg);
    let mut per_n = Vec::new();
    for (i, &n) in cfg.sizes().iter().enumerate() {
        let samples: Vec<&[f64]> = per_seed.iter().map(|(_, (_, sp))| sp[i].as_slice()).collect();
        let tail =
            counting_tail(&samples, (a, b), &k_grid).map_err(|err| CliError::at_seed(cfg.seed_list()[0], err))?;
        for (k, p) in k_grid.iter().zip(&tail) {
            aggregate.push(row![&base, &count, n, k, p]);
        }
        let counts: Vec<f64> = samples.iter().map(|x| x.iter().filter(|&&v| v >= a && v <= b).count() as f64).collect();
        per_n.push(json!({
            "n": n,
            "mean_count": mean(&counts),
            "expected_count": n as f64 * (model.cdf(b) - model.cdf(a)),
        }));
    }
    let metrics = json!({ "interval": [a, b], "per_n": per_n });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

/// Smooth positive profile relative to the reference Gaussian.
fn smooth_profile(beta: f64) -> Result<GridDensity, RmtError> {
    GridDensity::default_grid(beta, |x| 1.0 + 0.2 * (1.0 + 0.5 * x) * (-0.5 * x * x).exp())?.normalized()
}

fn reverse_flow(cfg: &ExperimentConfig) -> CliResult<Output> {
    let seed = cfg.seed_list()[0];
    let s = &cfg.statistics;
    let times = s.times.clone().unwrap_or_default();
    let max_order = s.max_order.unwrap_or(3);
    let alpha = s.cutoff_exponent.unwrap_or(rmt_core::relaxation1d::CUTOFF_EXPONENT);
    let u = smooth_profile(cfg.flow().beta.unwrap_or(1.0)).map_err(at(seed))?;
    let mut results = Table::new(&["seed", "order", "t", "l1_error"]);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "order", "slope"]);
    let [base, count] = seed_cols(cfg);
    let mut slopes = Vec::new();
    for k in 0..=max_order {
        let mut errs = Vec::new();
        for &t in &times {
            let g =
                if k == 0 { u.clone() } else { reverse_heat_flow_with_cutoff(&u, t, k, alpha).map_err(at(seed))? };
            let err = ou_evolve(&g, t).and_then(|v| v.l1_distance(&u)).map_err(at(seed))?;
            results.push(row![seed, k, t, err]);
            errs.push(err);
        }
        let slope = (times.len() >= 2).then(|| loglog_slope(&times, &errs));
        if let Some(sl) = slope {
            aggregate.push(row![&base, &count, k, sl]);
        }
        slopes.push(json!({ "order": k, "slope": slope }));
    }
    let provenance = vec![SeedRecord { seed, rows: results.rows.len() }];
    let metrics = json!({ "cutoff_exponent": alpha, "slopes": slopes });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn entropy_decay(cfg: &ExperimentConfig) -> CliResult<Output> {
    let seed = cfg.seed_list()[0];
    let f = cfg.flow();
    let horizon = f.horizon.unwrap_or(3.0);
    let steps = f.samples.unwrap_or(300);
    let t_grid: Vec<f64> = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
    let rs = f.r.clone().unwrap_or_default();
    let mut results = Table::new(&["seed", "r", "t", "entropy", "dirichlet", "mass"]);
    let mut aggregate = Table::new(&["seed_base", "seed_count", "r", "rate", "rate_times_r2"]);
    let [base, count] = seed_cols(cfg);
    let mut rates = Vec::new();
    for &r in &rs {
        let gap_cfg = cfg.gap_config(r);
        let p = GapProblem::new(gap_cfg).map_err(at(seed))?;
        let centre = gap_cfg.gamma_gap + r;
        let q0: Vec<f64> = p.centers().iter().map(|&u| (-(u - centre).powi(2) / (0.5 * r * r)).exp() + 1e-3).collect();
        let curves = p.solve(&q0, &t_grid).map_err(at(seed))?;
        for i in 0..curves.t.len() {
            results.push(row![seed, r, curves.t[i], curves.entropy[i], curves.dirichlet[i], curves.mass[i]]);
        }
        let rate = fit_decay_rate(&curves).map_err(at(seed))?;
        aggregate.push(row![&base, &count, r, rate, rate * r * r]);
        rates.push((r, rate));
    }
    let ratio = match (rates.iter().min_by(|a, b| a.0.total_cmp(&b.0)), rates.iter().max_by(|a, b| a.0.total_cmp(&b.0)))
    {
        (Some(small), Some(large)) if rates.len() >= 2 => json!({
            "r_small": small.0,
            "r_large": large.0,
            "rate_ratio": small.1 / large.1,
            "inverse_square_ratio": (large.0 / small.0).powi(2),
        }),
        _ => Value::Null,
    };
    let provenance = vec![SeedRecord { seed, rows: results.rows.len() }];
    let metrics = json!({
        "rates": rates.iter().map(|(r, k)| json!({ "r": r, "rate": k })).collect::<Vec<_>>(),
        "scaling": ratio,
    });
    Ok(Output { results, aggregate: Some(aggregate), metrics, provenance })
}

fn hessian_audit(cfg: &ExperimentConfig, pool: &ThreadPool) -> CliResult<Output> {
    let kind = cfg.kind();
    let draws = cfg.statistics.samples.unwrap_or(1000);
    let per_seed = sweep(cfg, pool, |seed| {
        let mut rng = stream_rng(seed, STREAM_AUX);
        let mut rows = Vec::new();
        let mut worst = (f64::INFINITY, f64::INFINITY);
        for &n in cfg.sizes() {
            let spec = if kind.is_covariance() {
                HamiltonianSpec::covariance(kind.beta(), n, cfg.ensemble.d.unwrap_or(0.5))
            } else {
                HamiltonianSpec::wigner(kind.beta(), n)
            }
            .map_err(at(seed))?;
            let (mut convex, mut relax) = (f64::INFINITY, f64::INFINITY);
            let mut checked = 0usize;
            while checked < draws {
                let mut x: Vec<f64> =
                    (0..n)
                        .map(|_| {
                            if kind.is_covariance() {
                                rng.random_range(0.01..4.0)
                            } else {
                                rng.random_range(-3.0..3.0)
                            }
                        })
                        .collect();
                x.sort_by(f64::total_cmp);
                if x.windows(2).any(|w| w[1] - w[0] < 1e-9) {
                    continue;
                }
                let v: Vec<f64> = (0..n).map(|_| EntryDist::Gaussian.draw(&mut rng, 1.0)).collect();
                let form = hessian_quadratic_form(&spec, &x, &v).map_err(at(seed))?;
                let rhs = convexity_rhs(&spec, &x, &v).map_err(at(seed))?;
                convex = convex.min((form - rhs) / form.abs().max(1.0));
                let mut gamma: Vec<f64> = x.iter().map(|g| g + rng.random_range(-0.05..0.05)).collect();
                gamma.sort_by(f64::total_cmp);
                let pp = PseudoPotential::new(gamma, rng.random_range(0.01..1.0)).map_err(at(seed))?;
                let rf = relaxation_form(&spec, &pp, &x, &v).map_err(at(seed))?;
                let rr = relaxation_rhs(&pp, &x, &v).map_err(at(seed))?;
                relax = relax.min((rf - rr) / rf.abs().max(1.0));
                checked += 1;
            }
            if convex < AUDIT_SLACK || relax < AUDIT_SLACK {
                return Err(CliError::Numeric {
                    seed,
                    reason: format!(
                        "bound violated at n = {n}: convexity slack {convex:e}, relaxation slack {relax:e}"
                    ),
                });
            }
            rows.push(row![seed, n, checked, convex, relax]);
            worst = (worst.0.min(convex), worst.1.min(relax));
        }
        Ok((rows, worst))
    })?;
    let (results, provenance) =
        collect_rows(&["seed", "n", "samples", "convexity_slack", "relaxation_slack"], &per_seed, |(r, _)| r);
    let worst_convex = per_seed.iter().map(|(_, (_, w))| w.0).fold(f64::INFINITY, f64::min);
    let worst_relax = per_seed.iter().map(|(_, (_, w))| w.1).fold(f64::INFINITY, f64::min);
    let metrics = json!({
        "beta": kind.beta(),
        "checked": results.rows.len() * draws,
        "worst_convexity_slack": worst_convex,
        "worst_relaxation_slack": worst_relax,
        "slack_limit": AUDIT_SLACK,
    });
    Ok(Output { results, aggregate: None, metrics, provenance })
}
