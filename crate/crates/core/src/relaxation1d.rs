//! One-dimensional grid solvers.
//!
//! [`GridDensity`] stores a density `u` relative to the Gaussian reference
//! `gamma(x) = sqrt(beta/2pi) exp(-beta x^2/2)` on a uniform grid. The
//! Ornstein-Uhlenbeck generator `B = (1/2)d^2 - (beta x/2)d = (1/2gamma) d(gamma d)`
//! is discretized in flux form with zero-flux walls, which makes the scheme
//! conserve mass exactly and fix `u = 1`.
//!
//! [`GapProblem`] is the two-particle relaxation flow written in the gap
//! coordinate `u = x_2 - x_1 > 0`: the generator is `(1/2)d^2 - (1/2)Phi' d` with
//! `Phi(u) = beta u^2/4 - beta log u + (u - g)^2/(2R^2)` and reversible measure
//! `omega ~ exp(-Phi)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmtError};

pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_POINTS: usize = 4096;
/// Largest Crank-Nicolson step used by [`ou_evolve`].
pub const OU_MAX_STEP: f64 = 1e-3;
/// Cutoff exponent: `theta(x) = theta_0(t^ALPHA x)`.
pub const CUTOFF_EXPONENT: f64 = 0.25;
pub const MAX_REVERSE_TIME: f64 = 0.1;
const OMEGA_FLOOR: f64 = 1e-280;

/// Density relative to the Gaussian reference on `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    half_width: f64,
    beta: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Tabulate `f` on `points` nodes of `[-L, L]` (no normalization).
    pub fn from_fn<F: Fn(f64) -> f64>(beta: f64, half_width: f64, points: usize, f: F) -> Result<Self> {
        if !(beta > 0.0) || !(half_width > 0.0) || points < 3 {
            return Err(RmtError::Config("grid needs beta > 0, L > 0 and at least three points".into()));
        }
        let h = 2.0 * half_width / (points - 1) as f64;
        let values = (0..points).map(|i| f(-half_width + i as f64 * h)).collect();
        Self::from_values(beta, half_width, values)
    }

    /// Default grid `[-8, 8]` with 4096 nodes.
    pub fn default_grid<F: Fn(f64) -> f64>(beta: f64, f: F) -> Result<Self> {
        Self::from_fn(beta, DEFAULT_HALF_WIDTH, DEFAULT_POINTS, f)
    }

    pub fn from_values(beta: f64, half_width: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(RmtError::Config("grid needs at least three points".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RmtError::Domain("grid densities must be finite and non-negative".into()));
        }
        Ok(GridDensity { half_width, beta, values })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn reference(&self, x: f64) -> f64 {
        (self.beta / (2.0 * PI)).sqrt() * (-0.5 * self.beta * x * x).exp()
    }

    /// Trapezoid weights `gamma(x_i) h` (halved at the walls).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let n = self.len();
        (0..n)
            .map(|i| {
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                end * h * self.reference(self.x(i))
            })
            .collect()
    }

    /// `int f(x, u(x)) gamma(x) dx` by the trapezoid rule.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.weights().iter().enumerate().map(|(i, w)| w * f(self.x(i), self.values[i])).sum()
    }

    /// `int u d gamma`.
    pub fn mass(&self) -> f64 {
        self.integrate(|_, u| u)
    }

    /// Mean and variance of the probability measure `u gamma dx / mass`.
    pub fn moments(&self) -> (f64, f64) {
        let m0 = self.mass();
        let m1 = self.integrate(|x, u| x * u) / m0;
        let m2 = self.integrate(|x, u| (x - m1) * (x - m1) * u) / m0;
        (m1, m2)
    }

    /// `||u - v||_{L^1(gamma)}` on a common grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.weights().iter().zip(self.values.iter().zip(&other.values)).map(|(w, (a, b))| w * (a - b).abs()).sum())
    }

    fn same_grid(&self, other: &GridDensity) -> Result<()> {
        if self.len() != other.len() {
            return Err(RmtError::LengthMismatch { expected: self.len(), found: other.len() });
        }
        if self.half_width != other.half_width || self.beta != other.beta {
            return Err(RmtError::Config("densities live on different grids".into()));
        }
        Ok(())
    }

    /// Rescale so that the mass is one.
    pub fn normalized(&self) -> Result<GridDensity> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(RmtError::Domain("density has zero mass".into()));
        }
        let mut out = self.clone();
        if (m - 1.0).abs() > 1e-14 {
            out.values.iter_mut().for_each(|v| *v /= m);
        }
        Ok(out)
    }

    /// Linear interpolation of the values at `x` (clamped to the walls).
    pub fn interpolate_linear(&self, x: f64) -> f64 {
        let h = self.spacing();
        let s = ((x + self.half_width) / h).clamp(0.0, (self.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.len() - 2);
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Four-point cubic interpolation at `x` (clamped to the walls).
    pub fn interpolate_cubic(&self, x: f64) -> f64 {
        let n = self.len();
        let h = self.spacing();
        let s = ((x + self.half_width) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).clamp(1, n - 3);
        let f = s - i as f64;
        let p = [self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]];
        // Lagrange weights on nodes -1, 0, 1, 2.
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        p.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Write `x,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.x(i), v)?;
        }
        Ok(())
    }

    /// Face coefficients `gamma(x_{i+1/2})/h` and cell factors `2 c_i gamma(x_i) h`,
    /// with `c_i` the trapezoid end factor.
    fn operator_coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.spacing();
        let faces = (0..self.len() - 1).map(|i| self.reference(self.x(i) + 0.5 * h) / h).collect();
        let cells = self.weights().iter().map(|w| 2.0 * w).collect();
        (faces, cells)
    }

    /// Discrete generator `B_h u`.
    pub fn apply_generator(&self, u: &[f64]) -> Vec<f64> {
        let (faces, cells) = self.operator_coefficients();
        apply_flux(&faces, &cells, u)
    }
}

fn apply_flux(faces: &[f64], cells: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { faces[i] * (u[i + 1] - u[i]) } else { 0.0 };
            let left = if i > 0 { faces[i - 1] * (u[i] - u[i - 1]) } else { 0.0 };
            (right - left) / cells[i]
        })
        .collect()
}

/// Solve `(I - a L) y = rhs` for the flux operator `L` with face coefficients
/// `faces` and cell factors `cells` (Thomas algorithm).
fn solve_implicit(faces: &[f64], cells: &[f64], a: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let mut d = 1.0;
        if i + 1 < n {
            let c = a * faces[i] / cells[i];
            upper[i] = -c;
            d += c;
        }
        if i > 0 {
            let c = a * faces[i - 1] / cells[i];
            lower[i] = -c;
            d += c;
        }
        diag[i] = d;
    }
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = upper[0] / diag[0];
    d_prime[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c_prime[i - 1];
        c_prime[i] = upper[i] / m;
        d_prime[i] = (rhs[i] - lower[i] * d_prime[i - 1]) / m;
    }
    let mut y = vec![0.0; n];
    y[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        y[i] = d_prime[i] - c_prime[i] * y[i + 1];
    }
    y
}

/// Crank-Nicolson integration of `du/dt = B u` up to time `t`, with steps of
/// at most `max_step`. The first step is split into four backward-Euler
/// substeps to damp stiff modes.
pub fn ou_evolve_with_step(u: &GridDensity, t: f64, max_step: f64) -> Result<GridDensity> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(RmtError::Config(format!("evolution time {t} must be non-negative")));
    }
    if !(max_step > 0.0) {
        return Err(RmtError::Config("step must be positive".into()));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let (faces, cells) = u.operator_coefficients();
    let steps = (t / max_step).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut v = u.values.clone();
    for _ in 0..4 {
        v = solve_implicit(&faces, &cells, 0.25 * dt, &v);
    }
    for _ in 1..steps {
        let bv = apply_flux(&faces, &cells, &v);
        let rhs: Vec<f64> = v.iter().zip(&bv).map(|(a, b)| a + 0.5 * dt * b).collect();
        v = solve_implicit(&faces, &cells, 0.5 * dt, &rhs);
    }
    Ok(GridDensity { values: v, ..u.clone() })
}

/// `e^{tB} u` with the default step cap.
pub fn ou_evolve(u: &GridDensity, t: f64) -> Result<GridDensity> {
    ou_evolve_with_step(u, t, OU_MAX_STEP)
}

/// Smooth cutoff: 1 on `|y| <= 1`, 0 on `|y| >= 2`.
pub fn smooth_cutoff(y: f64) -> f64 {
    let a = y.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let s = 2.0 - a;
    let e = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
    e(s) / (e(s) + e(1.0 - s))
}

/// Density `g_t` with `e^{tB} g_t = u + O(t^K)`.
///
/// `g_t` is `u + theta xi` with `xi = sum_{k=1}^{K-1} (-t)^k B^k u / k!` and
/// `theta(x) = theta_0(t^ALPHA x)` ([`CUTOFF_EXPONENT`]), normalized and then translated and dilated
/// so that its mean and variance are those that the OU flow maps onto the mean
/// and variance of `u` in time `t`.
pub fn reverse_heat_flow(u: &GridDensity, t: f64, order: usize) -> Result<GridDensity> {
    reverse_heat_flow_with_cutoff(u, t, order, CUTOFF_EXPONENT)
}

/// [`reverse_heat_flow`] with cutoff `theta_0(t^alpha x)` for a caller-chosen `alpha`.
pub fn reverse_heat_flow_with_cutoff(u: &GridDensity, t: f64, order: usize, alpha: f64) -> Result<GridDensity> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(RmtError::Config(format!("cutoff exponent {alpha} must be positive")));
    }
    if !(1..=3).contains(&order) {
        return Err(RmtError::Config(format!("order K = {order} must be 1, 2 or 3")));
    }
    if !(t >= 0.0) || t > MAX_REVERSE_TIME {
        return Err(RmtError::Domain(format!("time t = {t} must lie in [0, {MAX_REVERSE_TIME}]")));
    }
    if u.values.iter().any(|&v| !(v > 0.0)) {
        return Err(RmtError::Domain("reverse heat flow needs a strictly positive density".into()));
    }
    let beta = u.beta;
    let mut h = u.values.clone();
    if t > 0.0 {
        let mut power = u.values.clone();
        let mut coef = 1.0;
        let cut: Vec<f64> = (0..u.len()).map(|i| smooth_cutoff(t.powf(alpha) * u.x(i))).collect();
        for k in 1..order {
            power = u.apply_generator(&power);
            coef *= -t / k as f64;
            for ((hi, p), c) in h.iter_mut().zip(&power).zip(&cut) {
                *hi += c * coef * p;
            }
        }
    }
    if let Some(min) = h.iter().copied().reduce(f64::min) {
        if !(min > 0.0) {
            return Err(RmtError::Domain(format!("density became non-positive ({min:.3e}); use a smaller t")));
        }
    }
    let g = GridDensity { values: h, ..u.clone() }.normalized()?;
    let (mean_u, var_u) = u.moments();
    let target_mean = mean_u * (0.5 * beta * t).exp();
    let target_var = 1.0 / beta + (var_u - 1.0 / beta) * (beta * t).exp();
    if !(target_var > 0.0) {
        return Err(RmtError::Domain("target variance is not positive; use a smaller t".into()));
    }
    let (mean_g, var_g) = g.moments();
    let scale = (target_var / var_g).sqrt();
    if (target_mean - mean_g).abs() < 1e-14 && (scale - 1.0).abs() < 1e-14 {
        return Ok(g);
    }
    // Push the measure g gamma dx forward under y = target_mean + scale (x - mean_g).
    let values: Vec<f64> = (0..g.len())
        .map(|i| {
            let y = g.x(i);
            let x = mean_g + (y - target_mean) / scale;
            let v = g.interpolate_cubic(x).max(0.0) * g.reference(x) / (scale * g.reference(y));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .collect();
    GridDensity { values, ..g }.normalized()
}

/// Parameters of the two-particle gap problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub beta: f64,
    /// Relaxation scale `R`.
    pub r: f64,
    /// Gap between the two classical locations.
    pub gamma_gap: f64,
    /// Number of finite-volume cells on `(0, u_max)`.
    pub cells: usize,
    /// Right end of the domain; `gamma_gap + 10 R` when absent.
    #[serde(default)]
    pub u_max: Option<f64>,
    /// Backward-Euler step.
    pub dt: f64,
}

/// Finite-volume discretization of the gap flow on the `omega` measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProblem {
    config: GapConfig,
    h: f64,
    centers: Vec<f64>,
    omega: Vec<f64>,
    faces: Vec<f64>,
}

/// Entropy and Dirichlet-form curves of a gap solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurves {
    pub t: Vec<f64>,
    /// `S(q_t) = int q_t log q_t d omega`.
    pub entropy: Vec<f64>,
    /// `D(sqrt q_t) = (1/2) int (d sqrt q_t)^2 d omega`.
    pub dirichlet: Vec<f64>,
    /// `int q_t d omega`.
    pub mass: Vec<f64>,
}

impl EntropyCurves {
    /// Write `t,S,D` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,S,D")?;
        for ((t, s), d) in self.t.iter().zip(&self.entropy).zip(&self.dirichlet) {
            writeln!(out, "{t},{s},{d}")?;
        }
        Ok(())
    }
}

impl GapProblem {
    pub fn new(config: GapConfig) -> Result<Self> {
        if !(config.beta >= 1.0) {
            return Err(RmtError::Config(format!("beta = {} must be at least 1", config.beta)));
        }
        if !(config.r > 0.0) || !(config.gamma_gap > 0.0) || !(config.dt > 0.0) {
            return Err(RmtError::Config("R, the classical gap and dt must be positive".into()));
        }
        if config.cells < 8 {
            return Err(RmtError::Config("at least eight cells are required".into()));
        }
        let u_max = config.u_max.unwrap_or(config.gamma_gap + 10.0 * config.r);
        if !(u_max > config.gamma_gap) {
            return Err(RmtError::Config("u_max must exceed the classical gap".into()));
        }
        let h = u_max / config.cells as f64;
        // The confinement varies on scale R and the boundary layer on scale
        // 1/beta; both must be resolved.
        let required = (config.r / 8.0).min(0.125 / config.beta);
        if h > required {
            return Err(RmtError::GridTooCoarse { spacing: h, required });
        }
        let phi = |u: f64| {
            let b = config.beta;
            b * u * u / 4.0 - b * u.ln() + (u - config.gamma_gap).powi(2) / (2.0 * config.r * config.r)
        };
        let centers: Vec<f64> = (0..config.cells).map(|i| (i as f64 + 0.5) * h).collect();
        // Shift by the minimum of Phi before exponentiating.
        let shift = centers.iter().map(|&u| phi(u)).fold(f64::INFINITY, f64::min);
        // Floored so that far cells keep a well-posed linear system.
        let density = |u: f64| if u > 0.0 { (shift - phi(u)).exp().max(OMEGA_FLOOR) } else { 0.0 };
        let mut omega: Vec<f64> = centers.iter().map(|&u| density(u) * h).collect();
        let mut faces: Vec<f64> = (1..config.cells).map(|i| density(i as f64 * h) / h).collect();
        let z: f64 = omega.iter().sum();
        omega.iter_mut().for_each(|w| *w /= z);
        faces.iter_mut().for_each(|f| *f /= z);
        Ok(GapProblem { config, h, centers, omega, faces })
    }

    pub fn config(&self) -> &GapConfig {
        &self.config
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn mass(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.omega).map(|(a, w)| a * w).sum()
    }

    /// `int q log q d omega`, summed as `int (q log q - q + 1) d omega` so that
    /// rounding in the mass does not leak into small entropies.
    pub fn entropy(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.omega).map(|(&a, w)| w * if a > 0.0 { a * a.ln() - a + 1.0 } else { 1.0 }).sum()
    }

    /// `(1/2) int (d f)^2 d omega` with face weights.
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        0.5 * f.windows(2).zip(&self.faces).map(|(w, c)| c * (w[1] - w[0]).powi(2)).sum::<f64>()
    }

    /// `D(sqrt q)`.
    pub fn dirichlet_sqrt(&self, q: &[f64]) -> f64 {
        let r: Vec<f64> = q.iter().map(|v| v.max(0.0).sqrt()).collect();
        self.dirichlet(&r)
    }

    /// Normalize a non-negative relative density to unit `omega` mass.
    pub fn normalize(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.centers.len() {
            return Err(RmtError::LengthMismatch { expected: self.centers.len(), found: q.len() });
        }
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RmtError::Domain("relative densities must be finite and non-negative".into()));
        }
        let m = self.mass(q);
        if !(m > 0.0) {
            return Err(RmtError::Domain("relative density has zero mass".into()));
        }
        Ok(q.iter().map(|v| v / m).collect())
    }

    fn cell_factors(&self) -> Vec<f64> {
        self.omega.iter().map(|w| 2.0 * w).collect()
    }

    /// Backward-Euler solve of `dq/dt = L q` from `q0`, reporting entropy and
    /// Dirichlet form at every time in `t_grid`.
    pub fn solve(&self, q0: &[f64], t_grid: &[f64]) -> Result<EntropyCurves> {
        if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
            return Err(RmtError::Config("time grid must be non-negative and increasing".into()));
        }
        let mut q = self.normalize(q0)?;
        let cells = self.cell_factors();
        let mut curves = EntropyCurves { t: vec![], entropy: vec![], dirichlet: vec![], mass: vec![] };
        let mut t = 0.0;
        for &target in t_grid {
            let span = target - t;
            if span > 0.0 {
                let steps = (span / self.config.dt).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                for _ in 0..steps {
                    q = solve_implicit(&self.faces, &cells, dt, &q);
                }
                t = target;
            }
            curves.t.push(target);
            curves.entropy.push(self.entropy(&q));
            curves.dirichlet.push(self.dirichlet_sqrt(&q));
            curves.mass.push(self.mass(&q));
        }
        Ok(curves)
    }
}

/// Solve the gap problem of `config` from `q0`.
pub fn fokker_planck_gap(config: GapConfig, q0: &[f64], t_grid: &[f64]) -> Result<EntropyCurves> {
    GapProblem::new(config)?.solve(q0, t_grid)
}

/// Least-squares decay rate of `log S` over the samples with
/// `1e-10 S_0 <= S <= 0.1 S_0`.
pub fn fit_decay_rate(curves: &EntropyCurves) -> Result<f64> {
    let s0 = *curves.entropy.first().ok_or(RmtError::EmptyInput("entropy curve"))?;
    let pts: Vec<(f64, f64)> = curves
        .t
        .iter()
        .zip(&curves.entropy)
        .filter(|(_, &s)| s <= 0.1 * s0 && s >= 1e-10 * s0 && s > 0.0)
        .map(|(&t, &s)| (t, s.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(RmtError::Domain("too few samples in the fit window".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ms = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ms)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_cutoff(0.5), 1.0);
        assert_eq!(smooth_cutoff(-1.0), 1.0);
        assert_eq!(smooth_cutoff(2.5), 0.0);
        let mid = smooth_cutoff(1.5);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(smooth_cutoff(1.2) > smooth_cutoff(1.8));
    }

    #[test]
    fn generator_kills_constants_and_conserves_mass() {
        let u = GridDensity::from_fn(1.0, 8.0, 257, |x| 1.0 + 0.3 * (x * 1.7).sin()).unwrap();
        let ones = vec![1.0; u.len()];
        assert!(u.apply_generator(&ones).iter().all(|&v| v == 0.0));
        let bu = u.apply_generator(u.values());
        let w = u.weights();
        let total: f64 = bu.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!(total.abs() < 1e-13);
    }

    #[test]
    fn reverse_flow_argument_checks() {
        let u = GridDensity::from_fn(1.0, 8.0, 257, |_| 1.0).unwrap();
        assert!(reverse_heat_flow(&u, 0.2, 2).is_err());
        assert!(reverse_heat_flow(&u, 0.05, 4).is_err());
        let z = GridDensity::from_fn(1.0, 8.0, 257, |x| x.abs()).unwrap();
        assert!(reverse_heat_flow(&z, 0.05, 2).is_err());
    }

    #[test]
    fn coarse_gap_grid_is_rejected() {
        let cfg = GapConfig { beta: 1.0, r: 0.25, gamma_gap: 2.0, cells: 64, u_max: None, dt: 1e-3 };
        assert!(matches!(GapProblem::new(cfg), Err(RmtError::GridTooCoarse { .. })));
    }
}
