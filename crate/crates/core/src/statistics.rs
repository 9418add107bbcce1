//! Local spectral statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::ensembles::SpectralPoints;
use crate::error::{Result, RmtError};

/// Statistics are only offered where `rho(E)` is at least this fraction of
/// the maximum of the density.
pub const BULK_FRACTION: f64 = 0.05;
/// Default exponent `delta` of the window `ell = N^{-delta}`.
pub const DEFAULT_WINDOW_EXPONENT: f64 = 0.1;
/// Minimum raw count per bin before an estimate is flagged.
pub const MIN_BIN_COUNT: u64 = 20;

pub fn default_window(n: usize) -> f64 {
    (n as f64).powf(-DEFAULT_WINDOW_EXPONENT)
}

fn bulk_density(model: &DensityModel, e: f64) -> Result<f64> {
    let rho = model.rho(e);
    if !(rho >= BULK_FRACTION * model.max_rho()) || rho <= 0.0 {
        return Err(RmtError::Domain(format!("energy {e} is outside the bulk (rho = {rho:.3e})")));
    }
    Ok(rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub e: f64,
    pub ell: f64,
    pub rho_e: f64,
    pub n: usize,
    /// `N rho(E) (x_{j+1} - x_j)` for every `j` with `|x_j - E| <= ell`.
    pub rescaled_gaps: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `Lambda(E; s)` on `s_grid`.
    pub lambda_curve: Vec<f64>,
}

/// Gap statistics of `points` around `e`, scaled with `N = points.len()`.
pub fn gap_statistics(
    points: &SpectralPoints,
    model: &DensityModel,
    e: f64,
    ell: f64,
    s_grid: &[f64],
) -> Result<GapStatistics> {
    gap_statistics_scaled(points.values(), points.len(), model, e, ell, s_grid)
}

/// Gap statistics with an explicit scaling size `n`.
pub fn gap_statistics_scaled(
    x: &[f64],
    n: usize,
    model: &DensityModel,
    e: f64,
    ell: f64,
    s_grid: &[f64],
) -> Result<GapStatistics> {
    if x.is_empty() || n == 0 {
        return Err(RmtError::EmptyInput("spectral points"));
    }
    if !(ell > 0.0) {
        return Err(RmtError::Config(format!("window ell = {ell} must be positive")));
    }
    let rho_e = bulk_density(model, e)?;
    let scale = n as f64 * rho_e;
    let rescaled_gaps: Vec<f64> =
        x.windows(2).filter(|w| (w[0] - e).abs() <= ell).map(|w| scale * (w[1] - w[0])).collect();
    let norm = 2.0 * n as f64 * ell * rho_e;
    let mut sorted = rescaled_gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let lambda_curve = s_grid.iter().map(|&s| sorted.partition_point(|&g| g <= s) as f64 / norm).collect();
    Ok(GapStatistics { e, ell, rho_e, n, rescaled_gaps, s_grid: s_grid.to_vec(), lambda_curve })
}

impl GapStatistics {
    /// Write `s,lambda` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,lambda")?;
        for (s, l) in self.s_grid.iter().zip(&self.lambda_curve) {
            writeln!(out, "{s},{l}")?;
        }
        Ok(())
    }
}

/// Bin layout of a correlation estimate: bins for `alpha_1 = N rho (x_{i1} - E')`
/// and, for orders 2 and 3, bins for each separation
/// `u_k = N rho (x_{ik} - x_{i1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub alpha_edges: Vec<f64>,
    #[serde(default)]
    pub separation_edges: Vec<f64>,
}

impl CorrelationGrid {
    fn validate(&self, order: usize) -> Result<()> {
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.alpha_edges) {
            return Err(RmtError::Config("alpha edges must be increasing with at least two entries".into()));
        }
        if order > 1 && !increasing(&self.separation_edges) {
            return Err(RmtError::Config("separation edges must be increasing with at least two entries".into()));
        }
        Ok(())
    }

    fn separation_bins(&self) -> usize {
        self.separation_edges.len().saturating_sub(1)
    }

    /// Number of cells for the given order.
    pub fn cells(&self, order: usize) -> usize {
        (self.alpha_edges.len() - 1) * self.separation_bins().pow(order as u32 - 1)
    }

    /// Cell volume at flat index `cell`.
    fn volume(&self, order: usize, cell: usize) -> f64 {
        let sb = self.separation_bins();
        let mut rest = cell;
        let mut vol = 1.0;
        for _ in 1..order {
            let k = rest % sb;
            rest /= sb;
            vol *= self.separation_edges[k + 1] - self.separation_edges[k];
        }
        vol * (self.alpha_edges[rest + 1] - self.alpha_edges[rest])
    }
}

fn bin_of(edges: &[f64], v: f64) -> Option<usize> {
    if v < edges[0] || v >= edges[edges.len() - 1] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= v) - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub order: usize,
    pub e: f64,
    pub b: f64,
    pub grid: CorrelationGrid,
    /// Cell values, flat index `alpha_bin * S^{n-1} + ... + u_2 bin`, with `S`
    /// the number of separation bins (`u_2` varies fastest).
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub raw_counts: Vec<u64>,
    pub samples: usize,
    /// Set when some cell saw fewer than [`MIN_BIN_COUNT`] tuples.
    pub insufficient_statistics: bool,
}

/// Histogram estimate of the rescaled `n`-point correlation function around
/// `e`, averaged uniformly over `E' in [e - b, e + b]`.
///
/// The energy average is carried out exactly: each tuple contributes the
/// fraction of `E'` for which its `alpha_1` falls into a bin.
pub fn correlation_estimate(
    samples: &[SpectralPoints],
    model: &DensityModel,
    order: usize,
    e: f64,
    b: f64,
    grid: &CorrelationGrid,
) -> Result<CorrelationEstimate> {
    if !(1..=3).contains(&order) {
        return Err(RmtError::Config(format!("correlation order {order} must be 1, 2 or 3")));
    }
    if !(b > 0.0) {
        return Err(RmtError::Config(format!("energy half-window b = {b} must be positive")));
    }
    if samples.is_empty() {
        return Err(RmtError::EmptyInput("samples"));
    }
    grid.validate(order)?;
    let rho = bulk_density(model, e)?;
    let cells = grid.cells(order);
    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut raw_counts = vec![0u64; cells];
    let mut per_sample = vec![0.0; cells];
    for points in samples {
        per_sample.iter_mut().for_each(|v| *v = 0.0);
        accumulate(points.values(), rho, order, e, b, grid, &mut per_sample, &mut raw_counts);
        let n = points.len();
        let norm = falling_ratio(n, order);
        for c in 0..cells {
            let v = per_sample[c] * norm / grid.volume(order, c);
            sum[c] += v;
            sum_sq[c] += v * v;
        }
    }
    let s = samples.len() as f64;
    let values: Vec<f64> = sum.iter().map(|v| v / s).collect();
    let stderr =
        values
            .iter()
            .zip(&sum_sq)
            .map(|(m, sq)| {
                if samples.len() < 2 {
                    f64::NAN
                } else {
                    ((sq / s - m * m).max(0.0) * s / (s - 1.0)).sqrt() / s.sqrt()
                }
            })
            .collect();
    let insufficient_statistics = raw_counts.iter().any(|&c| c < MIN_BIN_COUNT);
    Ok(CorrelationEstimate {
        order,
        e,
        b,
        grid: grid.clone(),
        values,
        stderr,
        raw_counts,
        samples: samples.len(),
        insufficient_statistics,
    })
}

/// `N^n (N - n)!/N!`.
fn falling_ratio(n: usize, order: usize) -> f64 {
    (0..order).map(|k| n as f64 / (n as f64 - k as f64)).product()
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    x: &[f64],
    rho: f64,
    order: usize,
    e: f64,
    b: f64,
    grid: &CorrelationGrid,
    weights: &mut [f64],
    counts: &mut [u64],
) {
    let n = x.len();
    let scale = n as f64 * rho;
    let a = &grid.alpha_edges;
    let (a_lo, a_hi) = (a[0], a[a.len() - 1]);
    let sep = &grid.separation_edges;
    let sb = grid.separation_bins();
    // x_{i1} must allow E' in [e - b, e + b] with alpha_1 in [a_lo, a_hi].
    let lo = e - b + a_lo / scale;
    let hi = e + b + a_hi / scale;
    let start = x.partition_point(|&v| v < lo);
    let end = x.partition_point(|&v| v <= hi);
    let (s_lo, s_hi) = if order > 1 { (sep[0], sep[sep.len() - 1]) } else { (0.0, 0.0) };
    let mut alpha_weights = vec![0.0; a.len() - 1];
    for i1 in start..end {
        let xi = x[i1];
        // E' = xi - alpha/scale; fraction of [e - b, e + b] mapped into each bin.
        let mut any = false;
        for (k, w) in alpha_weights.iter_mut().enumerate() {
            let p_lo = (xi - a[k + 1] / scale).max(e - b);
            let p_hi = (xi - a[k] / scale).min(e + b);
            *w = ((p_hi - p_lo) / (2.0 * b)).max(0.0);
            any |= *w > 0.0;
        }
        if !any {
            continue;
        }
        let mut emit = |offset: usize| {
            for (k, &w) in alpha_weights.iter().enumerate() {
                if w > 0.0 {
                    let cell = k * sb.pow(order as u32 - 1) + offset;
                    weights[cell] += w;
                    counts[cell] += 1;
                }
            }
        };
        if order == 1 {
            emit(0);
            continue;
        }
        let j_lo = x.partition_point(|&v| v < xi + s_lo / scale);
        let j_hi = x.partition_point(|&v| v < xi + s_hi / scale);
        for i2 in j_lo..j_hi {
            if i2 == i1 {
                continue;
            }
            let Some(b2) = bin_of(sep, scale * (x[i2] - xi)) else { continue };
            if order == 2 {
                emit(b2);
                continue;
            }
            for (i3, &x3) in x.iter().enumerate().take(j_hi).skip(j_lo) {
                if i3 == i1 || i3 == i2 {
                    continue;
                }
                let Some(b3) = bin_of(sep, scale * (x3 - xi)) else { continue };
                emit(b3 * sb + b2);
            }
        }
    }
}

impl CorrelationEstimate {
    /// Write `alpha_lo,alpha_hi[,u2_lo,u2_hi[,u3_lo,u3_hi]],value,stderr,count` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("alpha_lo,alpha_hi");
        for k in 2..=self.order {
            header.push_str(&format!(",u{k}_lo,u{k}_hi"));
        }
        writeln!(out, "{header},value,stderr,count")?;
        let sb = self.grid.separation_bins();
        for c in 0..self.values.len() {
            let mut rest = c;
            let mut seps = Vec::new();
            for _ in 1..self.order {
                seps.push(rest % sb);
                rest /= sb;
            }
            let a = &self.grid.alpha_edges;
            let mut row = format!("{},{}", a[rest], a[rest + 1]);
            for k in seps {
                let s = &self.grid.separation_edges;
                row.push_str(&format!(",{},{}", s[k], s[k + 1]));
            }
            writeln!(out, "{row},{},{},{}", self.values[c], self.stderr[c], self.raw_counts[c])?;
        }
        Ok(())
    }
}

/// Limiting GUE pair correlation `1 - (sin(pi u)/(pi u))^2`.
pub fn sine_kernel_pair(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let s = (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u);
    1.0 - s * s
}

/// `(1/N) sum_{i in J} G(N(x_i - x_{i+m_1}), ..., N(x_i - x_{i+m_n}))` with
/// one-based indices; terms with `i + m_n > N` vanish.
pub fn observable_g<G: Fn(&[f64]) -> f64>(points: &[f64], indices: &[usize], offsets: &[usize], g: G) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(RmtError::EmptyInput("spectral points"));
    }
    if offsets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RmtError::Config("offsets must be strictly increasing".into()));
    }
    let nf = n as f64;
    let last = offsets.last().copied().unwrap_or(0);
    let mut args = vec![0.0; offsets.len()];
    let mut total = 0.0;
    for &i in indices {
        if i == 0 || i > n {
            return Err(RmtError::IndexOutOfRange { index: i, len: n });
        }
        if i + last > n {
            continue;
        }
        for (a, &m) in args.iter_mut().zip(offsets) {
            *a = nf * (points[i - 1] - points[i + m - 1]);
        }
        total += g(&args);
    }
    Ok(total / nf)
}

/// Empirical `P(#(points in I) >= K N |I|)` for each `K`, with `N` the size
/// of each sample.
pub fn counting_tail<S: AsRef<[f64]>>(samples: &[S], interval: (f64, f64), k_grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(RmtError::EmptyInput("samples"));
    }
    let (a, b) = interval;
    if !(b > a) {
        return Err(RmtError::Config(format!("interval [{a}, {b}] is empty")));
    }
    let counts: Vec<(usize, usize)> = samples
        .iter()
        .map(|s| {
            let x = s.as_ref();
            (x.iter().filter(|&&v| v >= a && v <= b).count(), x.len())
        })
        .collect();
    Ok(k_grid
        .iter()
        .map(|&k| {
            let hits = counts.iter().filter(|&&(c, n)| c as f64 >= k * n as f64 * (b - a)).count();
            hits as f64 / counts.len() as f64
        })
        .collect())
}

fn sorted_finite(v: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(RmtError::EmptyInput(what));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(RmtError::Domain(format!("{what} contain NaN")));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_finite(a, "first sample")?;
    let b = sorted_finite(b, "second sample")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<f64> {
    let a = sorted_finite(a, "sample")?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
