//! Experiment configuration: one JSON document, optionally overridden by flags.
//!
//! A loaded config is partial; [`ExperimentConfig::resolve`] fills every field
//! the chosen experiment reads with its default and validates the result. The
//! resolved form is what `summary.json` echoes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rmt_core::density::DensityModel;
use rmt_core::dynamics::{FlowConfig, FlowKind, DEFAULT_COLLISION_FLOOR};
use rmt_core::ensembles::{EnsembleKind, EnsembleSpec, EntryDist};
use rmt_core::relaxation1d::{GapConfig, GapProblem, CUTOFF_EXPONENT, MAX_REVERSE_TIME};
use rmt_core::statistics::BULK_FRACTION;
use serde::de::{DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Semicircle,
    MpLaw,
    LocalLaw,
    Rigidity,
    DbmRelax,
    Gaps,
    Correlations,
    CountingTail,
    ReverseFlow,
    EntropyDecay,
    HessianAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Semicircle,
        Experiment::MpLaw,
        Experiment::LocalLaw,
        Experiment::Rigidity,
        Experiment::DbmRelax,
        Experiment::Gaps,
        Experiment::Correlations,
        Experiment::CountingTail,
        Experiment::ReverseFlow,
        Experiment::EntropyDecay,
        Experiment::HessianAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Semicircle => "semicircle",
            Experiment::MpLaw => "mp-law",
            Experiment::LocalLaw => "local-law",
            Experiment::Rigidity => "rigidity",
            Experiment::DbmRelax => "dbm-relax",
            Experiment::Gaps => "gaps",
            Experiment::Correlations => "correlations",
            Experiment::CountingTail => "counting-tail",
            Experiment::ReverseFlow => "reverse-flow",
            Experiment::EntropyDecay => "entropy-decay",
            Experiment::HessianAudit => "hessian-audit",
        }
    }

    /// Experiments without sampled matrices: they run once, at the base seed.
    pub fn is_deterministic(self) -> bool {
        matches!(self, Experiment::ReverseFlow | Experiment::EntropyDecay)
    }

    fn default_kind(self) -> Option<EnsembleKind> {
        match self {
            Experiment::Semicircle | Experiment::HessianAudit => Some(EnsembleKind::WignerSymmetric),
            Experiment::MpLaw | Experiment::Rigidity | Experiment::CountingTail => Some(EnsembleKind::CovarianceReal),
            Experiment::LocalLaw => Some(EnsembleKind::CovarianceComplex),
            Experiment::DbmRelax | Experiment::Gaps | Experiment::Correlations => Some(EnsembleKind::WignerHermitian),
            Experiment::ReverseFlow | Experiment::EntropyDecay => None,
        }
    }

    fn default_sizes(self) -> Vec<usize> {
        match self {
            Experiment::Semicircle | Experiment::MpLaw | Experiment::CountingTail => vec![500],
            Experiment::LocalLaw => vec![500, 1000],
            Experiment::Rigidity => vec![100, 200, 400, 800],
            Experiment::DbmRelax => vec![100],
            Experiment::Gaps | Experiment::Correlations => vec![400],
            Experiment::HessianAudit => vec![4, 8, 16],
            Experiment::ReverseFlow | Experiment::EntropyDecay => vec![],
        }
    }

    fn default_seed_count(self) -> usize {
        match self {
            Experiment::Semicircle | Experiment::MpLaw => 20,
            Experiment::LocalLaw | Experiment::Rigidity => 50,
            Experiment::DbmRelax | Experiment::HessianAudit => 10,
            Experiment::Gaps | Experiment::Correlations | Experiment::CountingTail => 100,
            Experiment::ReverseFlow | Experiment::EntropyDecay => 1,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

/// Drift of the `dbm-relax` flow; the numeric parameters live in [`FlowSection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    Dbm,
    CovarianceFlow,
    LocalRelaxation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<EnsembleKind>,
    /// One size or a list of sizes.
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// Aspect ratio `N/M` of covariance kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry_dist: Option<EntryDist>,
    /// Ornstein-Uhlenbeck time applied to each sample before diagonalizing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<Drift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Number of equally spaced output times after `t = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Relaxation scales `R`; one for `dbm-relax`, any number for `entropy-decay`.
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_floor: Option<f64>,
    /// Finite-volume cells of the gap problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_gap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatisticsSection {
    /// Reference energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    /// Half-width of the energy average.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Gap window; the size-dependent default window when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_edges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_edges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<f64>>,
    /// `eta = N^-eta_exponent` for the local law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_exponent: Option<f64>,
    /// Error threshold whose hit rate the local law reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Histogram bins of the global-law experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Random configurations per seed and size in the Hessian audit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Reverse-flow times.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSection>,
    #[serde(default)]
    pub statistics: StatisticsSection,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn one_or_many<'de, D, T>(de: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Some(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

/// Parse a kebab-case enum value through its serde name.
pub fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} = {v} must be positive and finite")))
    }
}

fn increasing(name: &str, v: &[f64]) -> CliResult<()> {
    if v.len() >= 2 && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0]) {
        Ok(())
    } else {
        Err(bad(format!("{name} must be strictly increasing with at least two entries")))
    }
}

fn grid(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + step * k as f64).collect()
}

impl ExperimentConfig {
    /// Read and parse a config file. Parse failures carry their position.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Schema {
            line: e.line(),
            column: e.column(),
            reason: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    }

    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            ensemble: EnsembleSection::default(),
            flow: None,
            statistics: StatisticsSection::default(),
            seeds: SeedSection::default(),
            workers: None,
            output_dir: None,
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        self.ensemble.kind.expect("resolved config has an ensemble kind")
    }

    pub fn sizes(&self) -> &[usize] {
        self.ensemble.n.as_deref().unwrap_or_default()
    }

    pub fn entry_dist(&self) -> EntryDist {
        self.ensemble.entry_dist.unwrap_or(EntryDist::Gaussian)
    }

    pub fn flow(&self) -> &FlowSection {
        self.flow.as_ref().expect("resolved config has a flow section")
    }

    pub fn seed_list(&self) -> Vec<u64> {
        let base = self.seeds.base.unwrap_or(0);
        (0..self.seeds.count.unwrap_or(1) as u64).map(|k| base + k).collect()
    }

    /// Ensemble of size `n` at `seed`.
    pub fn ensemble_spec(&self, n: usize, seed: u64) -> EnsembleSpec {
        let kind = self.kind();
        if kind.is_covariance() {
            let d = self.ensemble.d.unwrap_or(0.5);
            let m = (n as f64 / d).round() as usize;
            EnsembleSpec::covariance(kind, n, m, self.entry_dist(), seed)
        } else {
            EnsembleSpec::wigner(kind, n, self.entry_dist(), seed)
        }
    }

    /// Limiting law of the eigenvalues of the configured ensemble.
    pub fn eigenvalue_model(&self) -> CliResult<DensityModel> {
        if self.kind().is_covariance() {
            DensityModel::marchenko_pastur(self.ensemble.d.unwrap_or(0.5)).map_err(|e| bad(e.to_string()))
        } else {
            Ok(DensityModel::semicircle())
        }
    }

    /// Flow of `dbm-relax` for `n` particles, with classical locations `gamma`.
    pub fn flow_config(&self, seed: u64, gamma: Vec<f64>) -> CliResult<FlowConfig> {
        let f = self.flow();
        let d = self.kind().is_covariance().then(|| self.ensemble.d.unwrap_or(0.5));
        let kind = match f.drift.unwrap_or(Drift::Dbm) {
            Drift::Dbm => FlowKind::Dbm,
            Drift::CovarianceFlow => FlowKind::CovarianceFlow { d: d.unwrap_or(0.5) },
            Drift::LocalRelaxation => FlowKind::LocalRelaxation { d, r: f.r.as_ref().map_or(0.1, |r| r[0]), gamma },
        };
        let cfg = FlowConfig {
            kind,
            beta: f.beta.unwrap_or(1.0),
            dt: f.dt.unwrap_or(1e-4),
            horizon: f.horizon.unwrap_or(1.0),
            collision_floor: f.collision_floor.unwrap_or(DEFAULT_COLLISION_FLOOR),
            seed,
        };
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    pub fn gap_config(&self, r: f64) -> GapConfig {
        let f = self.flow();
        GapConfig {
            beta: f.beta.unwrap_or(1.0),
            r,
            gamma_gap: f.gamma_gap.unwrap_or(2.0),
            cells: f.cells.unwrap_or(4000),
            u_max: None,
            dt: f.dt.unwrap_or(1e-3),
        }
    }

    /// Fill in defaults for every field the experiment reads, then validate.
    pub fn resolve(mut self) -> CliResult<Self> {
        let ex = self.experiment;
        self.seeds.base.get_or_insert(0);
        if ex.is_deterministic() {
            if self.seeds.count.is_some_and(|c| c != 1) {
                return Err(bad(format!("{ex} is deterministic and runs a single seed")));
            }
            self.seeds.count = Some(1);
        }
        self.seeds.count.get_or_insert(ex.default_seed_count());
        self.workers.get_or_insert(1);
        self.output_dir.get_or_insert_with(|| PathBuf::from("runs").join(ex.name()));

        if let Some(kind) = ex.default_kind() {
            let kind = *self.ensemble.kind.get_or_insert(kind);
            self.ensemble.n.get_or_insert_with(|| ex.default_sizes());
            self.ensemble.entry_dist.get_or_insert(EntryDist::Gaussian);
            if kind.is_covariance() {
                let d = *self.ensemble.d.get_or_insert(0.5);
                if !(d > 0.0 && d < 1.0) {
                    return Err(bad(format!("ensemble.d = {d} must satisfy 0 < d < 1")));
                }
            } else if self.ensemble.d.is_some() {
                return Err(bad("ensemble.d only applies to covariance kinds"));
            }
        } else if self.ensemble != EnsembleSection::default() {
            return Err(bad(format!("{ex} does not sample an ensemble")));
        }

        let needs_flow = matches!(ex, Experiment::DbmRelax | Experiment::EntropyDecay | Experiment::ReverseFlow);
        if !needs_flow && self.flow.is_some() {
            return Err(bad(format!("{ex} does not use a flow section")));
        }
        if needs_flow {
            let beta_default = self.ensemble.kind.map_or(1.0, EnsembleKind::beta);
            let cov = self.ensemble.kind.is_some_and(EnsembleKind::is_covariance);
            let f = self.flow.get_or_insert_with(FlowSection::default);
            f.beta.get_or_insert(beta_default);
            match ex {
                Experiment::DbmRelax => {
                    let drift = *f.drift.get_or_insert(if cov { Drift::CovarianceFlow } else { Drift::Dbm });
                    f.dt.get_or_insert(1e-4);
                    f.horizon.get_or_insert(1.0);
                    f.samples.get_or_insert(10);
                    f.collision_floor.get_or_insert(DEFAULT_COLLISION_FLOOR);
                    if drift == Drift::LocalRelaxation {
                        f.r.get_or_insert_with(|| vec![0.1]);
                    }
                }
                Experiment::EntropyDecay => {
                    f.dt.get_or_insert(1e-3);
                    f.horizon.get_or_insert(3.0);
                    f.samples.get_or_insert(300);
                    f.r.get_or_insert_with(|| vec![0.25, 0.5]);
                    f.cells.get_or_insert(4000);
                    f.gamma_gap.get_or_insert(2.0);
                }
                _ => {}
            }
        }

        let median = match ex.default_kind() {
            Some(_) => self.eigenvalue_model()?.quantile(0.5).map_err(|e| bad(e.to_string()))?,
            None => 0.0,
        };
        let s = &mut self.statistics;
        match ex {
            Experiment::Semicircle | Experiment::MpLaw => {
                s.bins.get_or_insert(40);
            }
            Experiment::LocalLaw => {
                s.e.get_or_insert(median);
                s.eta_exponent.get_or_insert(0.8);
                s.tolerance.get_or_insert(0.1);
            }
            Experiment::Gaps => {
                s.e.get_or_insert(median);
                s.s_grid.get_or_insert_with(|| grid(0.0, 0.1, 41));
            }
            Experiment::Correlations => {
                let order = *s.order.get_or_insert(2);
                s.e.get_or_insert(median);
                s.b.get_or_insert(0.05);
                if order == 1 {
                    s.alpha_edges.get_or_insert_with(|| grid(-5.0, 1.0, 11));
                } else {
                    s.alpha_edges.get_or_insert_with(|| vec![-1.0, 1.0]);
                    s.separation_edges.get_or_insert_with(|| grid(0.2, 0.2, 15));
                }
            }
            Experiment::CountingTail => {
                let e = *s.e.get_or_insert(median);
                s.interval.get_or_insert([e - 0.05, e + 0.05]);
                s.k_grid.get_or_insert_with(|| grid(0.0, 0.025, 61));
            }
            Experiment::ReverseFlow => {
                s.times.get_or_insert_with(|| vec![0.02, 0.04, 0.08]);
                s.max_order.get_or_insert(3);
                s.cutoff_exponent.get_or_insert(CUTOFF_EXPONENT);
            }
            Experiment::HessianAudit => {
                s.samples.get_or_insert(1000);
            }
            Experiment::Rigidity | Experiment::DbmRelax | Experiment::EntropyDecay => {}
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> CliResult<()> {
        let ex = self.experiment;
        if self.seeds.count == Some(0) {
            return Err(bad("seeds.count must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(bad("workers must be at least 1"));
        }
        if let Some(dir) = &self.output_dir {
            if dir.exists() && !dir.is_dir() {
                return Err(bad(format!("output_dir {} is not a directory", dir.display())));
            }
        }
        if let Some(kind) = self.ensemble.kind {
            if let Some(d) = self.ensemble.d {
                if !(d > 0.0 && d < 1.0) {
                    return Err(bad(format!("ensemble.d = {d} must satisfy 0 < d < 1")));
                }
            }
            let sizes = self.sizes();
            if sizes.is_empty() {
                return Err(bad("ensemble.n must list at least one size"));
            }
            for &n in sizes {
                if n < 2 {
                    return Err(bad(format!("ensemble.n = {n} must be at least 2")));
                }
                self.ensemble_spec(n, 0).validate().map_err(|e| bad(e.to_string()))?;
            }
            match ex {
                Experiment::Semicircle if kind.is_covariance() => {
                    return Err(bad("semicircle needs a Wigner kind"));
                }
                Experiment::MpLaw | Experiment::LocalLaw if !kind.is_covariance() => {
                    return Err(bad(format!("{ex} needs a covariance kind")));
                }
                Experiment::Correlations if sizes.len() != 1 => {
                    return Err(bad("correlations takes a single size"));
                }
                _ => {}
            }
            if let Some(tau) = self.ensemble.tau {
                if !(tau >= 0.0 && tau.is_finite()) {
                    return Err(bad(format!("ensemble.tau = {tau} must be non-negative")));
                }
                if kind.is_covariance() {
                    return Err(bad("ensemble.tau only applies to Wigner kinds"));
                }
            }
        }
        let s = &self.statistics;
        for (name, v) in [("statistics.b", s.b), ("statistics.ell", s.ell), ("statistics.tolerance", s.tolerance)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(e) = s.e {
            if !e.is_finite() {
                return Err(bad("statistics.e must be finite"));
            }
        }
        if let Some(x) = s.eta_exponent {
            if !(x > 0.0 && x < 1.0) {
                return Err(bad(format!("statistics.eta_exponent = {x} must satisfy 0 < x < 1")));
            }
        }
        if let Some(g) = &s.s_grid {
            increasing("statistics.s_grid", g)?;
        }
        if let Some(g) = &s.k_grid {
            if g.is_empty() || g.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
                return Err(bad("statistics.k_grid must hold non-negative values"));
            }
        }
        if let Some([a, b]) = s.interval {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(bad(format!("statistics.interval [{a}, {b}] must be non-empty")));
            }
        }
        if let Some(order) = s.order {
            if !(1..=3).contains(&order) {
                return Err(bad(format!("statistics.order = {order} must be 1, 2 or 3")));
            }
            if let Some(a) = &s.alpha_edges {
                increasing("statistics.alpha_edges", a)?;
            }
            if order > 1 {
                increasing("statistics.separation_edges", s.separation_edges.as_deref().unwrap_or_default())?;
            }
        }
        if let Some(bins) = s.bins {
            if bins == 0 {
                return Err(bad("statistics.bins must be positive"));
            }
        }
        if s.samples == Some(0) {
            return Err(bad("statistics.samples must be positive"));
        }
        if let Some(times) = &s.times {
            if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && *t <= MAX_REVERSE_TIME)) {
                return Err(bad(format!("statistics.times must lie in (0, {MAX_REVERSE_TIME}]")));
            }
        }
        if let Some(k) = s.max_order {
            if !(1..=3).contains(&k) {
                return Err(bad(format!("statistics.max_order = {k} must be 1, 2 or 3")));
            }
        }
        if let (Some(e), Experiment::Gaps | Experiment::Correlations) = (s.e, ex) {
            let model = self.eigenvalue_model()?;
            if model.rho(e) < BULK_FRACTION * model.max_rho() {
                return Err(bad(format!("statistics.e = {e} lies outside the bulk of the limiting density")));
            }
        }
        if let Some(a) = s.cutoff_exponent {
            positive("statistics.cutoff_exponent", a)?;
        }

        if let Some(f) = &self.flow {
            if f.samples == Some(0) {
                return Err(bad("flow.samples must be positive"));
            }
            match ex {
                Experiment::DbmRelax => {
                    let kind = self.kind();
                    let drift = f.drift.unwrap_or(Drift::Dbm);
                    if (drift == Drift::CovarianceFlow) != kind.is_covariance() && drift != Drift::LocalRelaxation {
                        return Err(bad(format!("flow.drift {drift:?} does not match ensemble kind {kind:?}")));
                    }
                    let n = self.sizes()[0];
                    let gamma: Vec<f64> = (0..n).map(|k| k as f64).collect();
                    self.flow_config(0, gamma)?;
                }
                Experiment::EntropyDecay => {
                    let rs = f.r.as_deref().unwrap_or_default();
                    if rs.is_empty() {
                        return Err(bad("flow.r must list at least one scale"));
                    }
                    for &r in rs {
                        positive("flow.r", r)?;
                        GapProblem::new(self.gap_config(r)).map_err(|e| bad(e.to_string()))?;
                    }
                    positive("flow.horizon", f.horizon.unwrap_or(0.0))?;
                }
                Experiment::ReverseFlow => {
                    let beta = f.beta.unwrap_or(1.0);
                    if !(beta >= 1.0 && beta.is_finite()) {
                        return Err(bad(format!("flow.beta = {beta} must be at least 1")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
