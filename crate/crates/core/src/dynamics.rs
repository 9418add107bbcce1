//! Eigenvalue flows: Dyson Brownian motion, the singular-value flow of
//! covariance matrices and the local relaxation flow.
//!
//! Every flow has the form `dx_i = b_i(x) dt + dB_i / sqrt(N)` and is
//! integrated by Euler-Maruyama. A step that would reorder the points, bring
//! two of them closer than the collision floor, or (for singular values) push
//! one below the floor, is retried with half the step and the same Gaussian
//! draw. For `beta = 1` gaps do approach the floor; when all halvings fail,
//! [`run_flow`] draws new noise for the step.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmtError};
use crate::rng::{stream_rng, STREAM_FLOW};

pub const DEFAULT_COLLISION_FLOOR: f64 = 1e-8;
/// Number of step halvings tried before a step is declared stiff.
pub const MAX_HALVINGS: usize = 40;
/// Fresh Gaussian draws tried by [`run_flow`] when a step exhausts its halvings.
pub const MAX_REDRAWS: usize = 64;
const CHECKPOINT_MAGIC: &[u8; 8] = b"RMTTRJ01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "drift")]
pub enum FlowKind {
    Dbm,
    CovarianceFlow {
        d: f64,
    },
    /// The flow of `d` (DBM when absent) plus the confinement
    /// `-(x_i - gamma_i)/(2R^2)`.
    LocalRelaxation {
        #[serde(default)]
        d: Option<f64>,
        r: f64,
        gamma: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    #[serde(flatten)]
    pub kind: FlowKind,
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_floor")]
    pub collision_floor: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_floor() -> f64 {
    DEFAULT_COLLISION_FLOOR
}

impl FlowConfig {
    pub fn new(kind: FlowKind, beta: f64, dt: f64, horizon: f64, seed: u64) -> Result<Self> {
        let cfg = FlowConfig { kind, beta, dt, horizon, collision_floor: DEFAULT_COLLISION_FLOOR, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(RmtError::Config(format!("beta = {} must be at least 1", self.beta)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(RmtError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(RmtError::Config(format!("horizon = {} must be non-negative", self.horizon)));
        }
        if self.horizon > 0.0 && self.dt > self.horizon {
            return Err(RmtError::Config(format!("dt = {} exceeds the horizon {}", self.dt, self.horizon)));
        }
        if !(self.collision_floor > 0.0) {
            return Err(RmtError::Config("collision floor must be positive".into()));
        }
        let check_d = |d: f64| {
            if d > 0.0 && d < 1.0 {
                Ok(())
            } else {
                Err(RmtError::Config(format!("ratio d = {d} must satisfy 0 < d < 1")))
            }
        };
        match &self.kind {
            FlowKind::Dbm => {}
            FlowKind::CovarianceFlow { d } => check_d(*d)?,
            FlowKind::LocalRelaxation { d, r, gamma } => {
                if let Some(d) = d {
                    check_d(*d)?;
                }
                if !(*r > 0.0) {
                    return Err(RmtError::Config(format!("relaxation scale R = {r} must be positive")));
                }
                if gamma.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(RmtError::Config("classical locations must be strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Ratio `d` when the flow lives on singular values.
    pub fn covariance_ratio(&self) -> Option<f64> {
        match &self.kind {
            FlowKind::Dbm => None,
            FlowKind::CovarianceFlow { d } => Some(*d),
            FlowKind::LocalRelaxation { d, .. } => *d,
        }
    }
}

/// Ordered states of one flow at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub config: FlowConfig,
}

/// Result of one accepted integrator step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub dt_used: f64,
}

fn check_state(x: &[f64], positive: bool, floor: f64) -> std::result::Result<(), f64> {
    let mut worst = f64::INFINITY;
    for w in x.windows(2) {
        worst = worst.min(w[1] - w[0]);
    }
    if positive {
        if let Some(&first) = x.first() {
            worst = worst.min(first);
        }
    }
    if x.iter().all(|v| v.is_finite()) && !(worst < floor) {
        Ok(())
    } else {
        Err(worst)
    }
}

/// Drift `b(x)` of the configured flow.
pub fn drift_vector(config: &FlowConfig, x: &[f64]) -> Result<Vec<f64>> {
    let positive = config.covariance_ratio().is_some();
    if x.is_empty() {
        return Err(RmtError::EmptyInput("configuration"));
    }
    crate::gibbs::check_points(x, positive)?;
    let n = x.len() as f64;
    let beta = config.beta;
    let mut out: Vec<f64> = match config.covariance_ratio() {
        None => x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let mut pair = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    if j != i {
                        pair += 1.0 / (xi - xj);
                    }
                }
                beta * (-xi / 4.0 + pair / (2.0 * n))
            })
            .collect(),
        Some(d) => {
            let c = 0.5 * (beta * (1.0 / d - 1.0) + (beta - 1.0) / n);
            x.iter()
                .enumerate()
                .map(|(i, &xi)| {
                    let mut pair = 0.0;
                    for (j, &xj) in x.iter().enumerate() {
                        if j != i {
                            pair += 1.0 / (xi - xj) + 1.0 / (xi + xj);
                        }
                    }
                    -beta * xi / (2.0 * d) + beta * pair / (2.0 * n) + c / xi
                })
                .collect()
        }
    };
    if let FlowKind::LocalRelaxation { r, gamma, .. } = &config.kind {
        if gamma.len() != x.len() {
            return Err(RmtError::LengthMismatch { expected: gamma.len(), found: x.len() });
        }
        let r2 = r * r;
        for ((b, xi), g) in out.iter_mut().zip(x).zip(gamma) {
            *b -= 0.5 * (xi - g) / r2;
        }
    }
    Ok(out)
}

fn step_at(config: &FlowConfig, x: &[f64], dt: f64, noise: &[f64], time: f64) -> Result<StepOutcome> {
    if noise.len() != x.len() {
        return Err(RmtError::LengthMismatch { expected: x.len(), found: noise.len() });
    }
    if !(dt > 0.0) {
        return Err(RmtError::Config(format!("step size {dt} must be positive")));
    }
    let drift = drift_vector(config, x)?;
    let n = x.len() as f64;
    let positive = config.covariance_ratio().is_some();
    let mut h = dt;
    let mut worst = f64::NAN;
    for _ in 0..=MAX_HALVINGS {
        let scale = (h / n).sqrt();
        let next: Vec<f64> = x.iter().zip(&drift).zip(noise).map(|((xi, bi), zi)| xi + bi * h + zi * scale).collect();
        match check_state(&next, positive, config.collision_floor) {
            Ok(()) => return Ok(StepOutcome { state: next, dt_used: h }),
            Err(gap) => worst = gap,
        }
        h *= 0.5;
    }
    Err(RmtError::Stiffness { time, gap: worst })
}

/// One Euler-Maruyama step `x + b(x) dt + noise sqrt(dt/N)` with step halving.
pub fn step(config: &FlowConfig, x: &[f64], dt: f64, noise: &[f64]) -> Result<StepOutcome> {
    step_at(config, x, dt, noise, 0.0)
}

/// Largest step allowed by the collision-safety rule `dt <= gap^2 N / 10`.
pub fn safe_step(x: &[f64], positive: bool) -> f64 {
    let mut gap = f64::INFINITY;
    for w in x.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    if positive {
        if let Some(&first) = x.first() {
            gap = gap.min(2.0 * first);
        }
    }
    gap * gap * x.len() as f64 / 10.0
}

/// Integrate from `initial` and record the state at each of `sample_times`.
pub fn run_flow(initial: &[f64], config: &FlowConfig, sample_times: &[f64]) -> Result<Trajectory> {
    config.validate()?;
    let positive = config.covariance_ratio().is_some();
    if initial.is_empty() {
        return Err(RmtError::EmptyInput("initial configuration"));
    }
    if let Err(gap) = check_state(initial, positive, config.collision_floor) {
        return Err(RmtError::SingularConfiguration(format!(
            "initial configuration is not strictly ordered (gap {gap:e})"
        )));
    }
    if config.horizon == 0.0 {
        return Ok(Trajectory { times: vec![0.0], states: vec![initial.to_vec()], config: config.clone() });
    }
    if sample_times.iter().any(|&t| !(0.0..=config.horizon).contains(&t)) {
        return Err(RmtError::Config("sample times must lie in [0, horizon]".into()));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(RmtError::Config("sample times must be increasing".into()));
    }
    let mut rng = stream_rng(config.seed, STREAM_FLOW);
    let mut x = initial.to_vec();
    let mut t = 0.0;
    let mut noise = vec![0.0; x.len()];
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    for &target in sample_times {
        while target - t > 1e-12 * target.max(1.0) {
            let h = config.dt.min(target - t).min(safe_step(&x, positive));
            let mut redraws = 0;
            let out = loop {
                for z in noise.iter_mut() {
                    *z = StandardNormal.sample(&mut rng);
                }
                match step_at(config, &x, h, &noise, t) {
                    Ok(out) => break out,
                    Err(RmtError::Stiffness { .. }) if redraws < MAX_REDRAWS => redraws += 1,
                    Err(e) => return Err(e),
                }
            };
            x = out.state;
            t += out.dt_used;
        }
        times.push(target);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states, config: config.clone() })
}

/// Per-time `sum_j (x_j - gamma_j)^2`.
pub fn rigidity_q(trajectory: &Trajectory, gamma: &[f64]) -> Result<Vec<f64>> {
    trajectory
        .states
        .iter()
        .map(|state| {
            if state.len() != gamma.len() {
                return Err(RmtError::LengthMismatch { expected: state.len(), found: gamma.len() });
            }
            Ok(state.iter().zip(gamma).map(|(x, g)| (x - g).powi(2)).sum())
        })
        .collect()
}

/// Average of [`rigidity_q`] over independent trajectories sampled at the
/// same times.
pub fn mean_rigidity_q(trajectories: &[Trajectory], gamma: &[f64]) -> Result<Vec<f64>> {
    let first = trajectories.first().ok_or(RmtError::EmptyInput("trajectories"))?;
    let mut acc = vec![0.0; first.times.len()];
    for tr in trajectories {
        let q = rigidity_q(tr, gamma)?;
        if q.len() != acc.len() {
            return Err(RmtError::LengthMismatch { expected: acc.len(), found: q.len() });
        }
        for (a, v) in acc.iter_mut().zip(q) {
            *a += v;
        }
    }
    let m = trajectories.len() as f64;
    Ok(acc.into_iter().map(|a| a / m).collect())
}

/// CSV rows `seed,time,k,value` with one-based `k`.
pub fn write_trajectory_csv<W: Write>(mut out: W, trajectories: &[&Trajectory]) -> Result<()> {
    writeln!(out, "seed,time,k,value")?;
    for tr in trajectories {
        for (t, state) in tr.times.iter().zip(&tr.states) {
            for (k, v) in state.iter().enumerate() {
                writeln!(out, "{},{},{},{}", tr.config.seed, t, k + 1, v)?;
            }
        }
    }
    Ok(())
}

/// Binary checkpoint: magic `RMTTRJ01`, then little-endian `u64` N, `u64` T,
/// `T` times as `f64`, then the `T x N` states in row-major `f64`.
pub fn write_checkpoint<W: Write>(mut out: W, trajectory: &Trajectory) -> Result<()> {
    let n = trajectory.states.first().map_or(0, Vec::len);
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&(trajectory.times.len() as u64).to_le_bytes())?;
    for t in &trajectory.times {
        out.write_all(&t.to_le_bytes())?;
    }
    for state in &trajectory.states {
        for v in state {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`]; returns `(times, states)`.
pub fn read_checkpoint<R: Read>(mut input: R) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(RmtError::Io("not a trajectory checkpoint".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut input)?) as usize;
    let t = u64::from_le_bytes(next(&mut input)?) as usize;
    let times = (0..t).map(|_| next(&mut input).map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
    let states = (0..t)
        .map(|_| (0..n).map(|_| next(&mut input).map(f64::from_le_bytes)).collect())
        .collect::<Result<Vec<_>>>()?;
    Ok((times, states))
}
