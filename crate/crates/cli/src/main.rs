//! `rmt-lab`: named random-matrix experiments with reproducible artifacts.
//!
//! ```text
//! rmt-lab <experiment> [--config file.json] [overrides]
//! rmt-lab run <experiment> [--config file.json] [overrides]
//! rmt-lab validate <file.json>
//! ```
//!
//! Exit status: 0 on success, 1 on a numeric failure (the message names the
//! seed), 2 on usage or configuration errors.

mod config;
mod error;
mod experiments;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rmt_core::ensembles::{EnsembleKind, EntryDist};

use config::{parse_name, Drift, Experiment, ExperimentConfig, FlowSection};
use error::{CliError, CliResult};
use output::{write_json, Summary, BUILD};

const WORKERS_ENV: &str = "RMT_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "rmt-lab", version, about = "Random-matrix experiments with reproducible seed sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run(Box<RunArgs>),
    /// Check a config file without running it.
    Validate { path: PathBuf },
    /// List experiment names.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name; optional when the config file names one.
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_name::<EnsembleKind>)]
    kind: Option<EnsembleKind>,
    #[arg(long, value_parser = parse_name::<EntryDist>)]
    dist: Option<EntryDist>,
    /// Aspect ratio of covariance kinds.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_name::<Drift>)]
    drift: Option<Drift>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Relaxation scales, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    #[arg(long)]
    e: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    /// Random configurations per seed in the Hessian audit.
    #[arg(long)]
    samples: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> CliResult<ExperimentConfig> {
        let named = self.experiment.as_deref().map(str::parse::<Experiment>).transpose()?;
        let mut cfg = match (&self.config, named) {
            (Some(path), named) => {
                let cfg = ExperimentConfig::load(path)?;
                if let Some(ex) = named.filter(|&ex| ex != cfg.experiment) {
                    return Err(CliError::Usage(format!("config runs {} but {ex} was requested", cfg.experiment)));
                }
                cfg
            }
            (None, Some(ex)) => ExperimentConfig::new(ex),
            (None, None) => return Err(CliError::Usage("name an experiment or pass --config".into())),
        };
        let ens = &mut cfg.ensemble;
        set(&mut ens.n, self.n.clone());
        set(&mut ens.kind, self.kind);
        set(&mut ens.entry_dist, self.dist);
        set(&mut ens.d, self.d);
        set(&mut ens.tau, self.tau);
        set(&mut cfg.seeds.count, self.seeds);
        set(&mut cfg.seeds.base, self.base_seed);
        set(&mut cfg.output_dir, self.output.clone());
        let flow_flags = self.drift.is_some()
            || self.beta.is_some()
            || self.dt.is_some()
            || self.horizon.is_some()
            || self.r.is_some();
        if flow_flags {
            let f = cfg.flow.get_or_insert_with(FlowSection::default);
            set(&mut f.drift, self.drift);
            set(&mut f.beta, self.beta);
            set(&mut f.dt, self.dt);
            set(&mut f.horizon, self.horizon);
            set(&mut f.r, self.r.clone());
        }
        let s = &mut cfg.statistics;
        set(&mut s.e, self.e);
        set(&mut s.b, self.b);
        set(&mut s.ell, self.ell);
        set(&mut s.order, self.order);
        set(&mut s.samples, self.samples);
        // Flag, then environment, then config file.
        match (self.workers, std::env::var(WORKERS_ENV)) {
            (Some(w), _) => cfg.workers = Some(w),
            (None, Ok(v)) => {
                let w = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{WORKERS_ENV} = {v:?} is not a positive integer")))?;
                cfg.workers = Some(w);
            }
            (None, Err(_)) => {}
        }
        cfg.resolve()
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn run(args: &RunArgs) -> CliResult<()> {
    let cfg = args.config()?;
    let dir = cfg.output_dir.clone().unwrap_or_default();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("output_dir {} is not writable: {e}", dir.display())))?;
    let log_path = dir.join("meta.log");
    let mut log = std::fs::File::create(&log_path)
        .map_err(|e| CliError::Config(format!("output_dir {} is not writable: {e}", dir.display())))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let workers = cfg.workers.unwrap_or(1);
    writeln!(log, "rmt-lab {} ({})", BUILD.version, BUILD.git_describe)?;
    writeln!(log, "experiment={}", cfg.experiment)?;
    writeln!(log, "started_unix={started}")?;
    writeln!(log, "workers={workers}")?;
    let seeds = cfg.seed_list();
    writeln!(log, "seeds={}..={} ({})", seeds[0], seeds[seeds.len() - 1], seeds.len())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let clock = Instant::now();
    let out = match experiments::run(&cfg, &pool) {
        Ok(out) => out,
        Err(e) => {
            writeln!(log, "status=failed")?;
            writeln!(log, "error={e}")?;
            return Err(e);
        }
    };
    let elapsed = clock.elapsed().as_secs_f64();

    let mut files = vec!["results.csv", "summary.json", "meta.log"];
    out.results.write(&dir.join("results.csv"))?;
    if let Some(agg) = &out.aggregate {
        agg.write(&dir.join("aggregate.csv"))?;
        files.insert(1, "aggregate.csv");
    }
    let summary = Summary {
        schema: 1,
        experiment: cfg.experiment.name(),
        build: &BUILD,
        config: &cfg,
        seeds: &out.provenance,
        files: files.clone(),
        metrics: &out.metrics,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    writeln!(log, "rows={}", out.results.rows.len())?;
    writeln!(log, "elapsed_s={elapsed:.3}")?;
    writeln!(log, "status=ok")?;
    println!("{}: wrote {} to {}", cfg.experiment, files.join(", "), dir.display());
    Ok(())
}

fn validate(path: &Path) -> CliResult<()> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{} does not exist", path.display())));
    }
    let cfg = ExperimentConfig::load(path)?.resolve()?;
    println!("ok: {} ({})", path.display(), cfg.experiment);
    Ok(())
}

/// A bare experiment name stands for `run <name>`.
fn normalized_args() -> Vec<String> {
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(first) = args.get(1) {
        let known = ["run", "validate", "list", "help"];
        if !first.starts_with('-') && !known.contains(&first.as_str()) {
            args.insert(1, "run".into());
        }
    }
    args
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(normalized_args());
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate { path } => validate(path),
        Command::List => {
            for ex in Experiment::ALL {
                println!("{ex}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
