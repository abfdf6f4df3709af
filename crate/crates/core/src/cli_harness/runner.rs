use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InstanceSource, Mode};
use crate::distributions::JointDistribution;
use crate::error::{Error, Result};
use crate::learners::{default_lipschitz, SupplierSpec};
use crate::repeated_game::{bound_value, simulate, BoundKind, BoundParams};
use crate::rng::SeedStreams;
use crate::stage_game::{price_of_anarchy, solve_equilibrium, PriceOfAnarchy, StackelbergEquilibrium};
use crate::vertical_integration::{default_eta, default_gamma, run_adversarial, AdversarialInstance};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const AGGREGATE_FILE: &str = "aggregate.json";
const RUNS_DIR: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub distribution: String,
    pub w_star: f64,
    pub q_star: f64,
    pub supplier_utility: f64,
    pub retailer_utility: f64,
    pub unique: bool,
    pub stationary_points: Vec<f64>,
    pub poa: f64,
    pub price_of_anarchy: PriceOfAnarchy,
}

pub fn solve_se(config: &ExperimentConfig) -> Result<SolveReport> {
    let dist = JointDistribution::from_family(config.family()?)?;
    let se = solve_equilibrium(&dist)?;
    let poa = price_of_anarchy(&dist, &se)?;
    Ok(SolveReport {
        distribution: config.family()?.to_string(),
        w_star: se.w_star,
        q_star: se.q_star,
        supplier_utility: se.supplier_utility,
        retailer_utility: se.retailer_utility,
        unique: se.unique,
        stationary_points: se.stationary_points,
        poa: poa.ratio,
        price_of_anarchy: poa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub horizon: usize,
    pub seed: u64,
    /// Trajectory CSV, relative to the run directory.
    pub file: PathBuf,
}

/// Bound values and learner constants at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonBounds {
    pub horizon: usize,
    pub values: BTreeMap<BoundKind, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    /// The resolved configuration, without its output directory.
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Not part of `config_hash`.
    pub created_at: String,
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<StackelbergEquilibrium>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_params: Option<BoundParams>,
    pub bounds: Vec<HorizonBounds>,
    /// The bound used for the compliance fraction, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_bound: Option<BoundKind>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(Error::config(format!("no manifest found in {}", dir.display())));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path, message: e.to_string() })
    }
}

pub struct RunOptions {
    pub force: bool,
    pub quiet: bool,
}

/// Where a run writes: `--out`, then the environment override, then the config.
pub fn output_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    config.output_dir.clone().ok_or_else(|| Error::config("no output directory: pass --out or set `output_dir`"))
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if occupied && !force {
            return Err(Error::config(format!(
                "output directory {} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
        if occupied {
            let runs = dir.join(RUNS_DIR);
            if runs.exists() {
                std::fs::remove_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
            }
            for f in [MANIFEST_FILE, AGGREGATE_FILE] {
                let p = dir.join(f);
                if p.exists() {
                    std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
        }
    }
    let runs = dir.join(RUNS_DIR);
    std::fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))
}

fn run_file(horizon: usize, seed: u64) -> PathBuf {
    Path::new(RUNS_DIR).join(format!("T{horizon}_seed{seed}.csv"))
}

fn primary_bound(config: &ExperimentConfig) -> Option<BoundKind> {
    match (config.mode, &config.supplier) {
        (Mode::Adversarial, _) => Some(BoundKind::Exp3Vi),
        (_, Some(SupplierSpec::Etc {})) => Some(BoundKind::Etc),
        (_, Some(SupplierSpec::Piyavskii { .. })) => Some(BoundKind::Piyavskii),
        (_, Some(SupplierSpec::EtcNoCost {})) => Some(BoundKind::EtcFtl),
        _ => None,
    }
}

fn bound_table(kinds: &[BoundKind], params: &BoundParams, horizon: usize) -> Result<BTreeMap<BoundKind, f64>> {
    kinds.iter().map(|&k| Ok((k, bound_value(k, params, horizon)?))).collect()
}

/// Runs a simulate or adversarial experiment and writes manifest, trajectories
/// and aggregate into the output directory.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<PathBuf> {
    let dir = output_dir(config)?;
    prepare_dir(&dir, options.force)?;
    let mut echo = config.clone();
    echo.output_dir = None;
    let jobs: Vec<(usize, u64)> =
        config.horizons.iter().flat_map(|&h| config.seed_list().iter().map(move |&s| (h, s))).collect();
    let runs: Vec<RunEntry> =
        jobs.iter().map(|&(horizon, seed)| RunEntry { horizon, seed, file: run_file(horizon, seed) }).collect();

    let (equilibrium, bound_params, bounds) = match config.mode {
        Mode::Simulate => simulate_all(config, &dir, &runs, options)?,
        Mode::Adversarial => adversarial_all(config, &dir, &runs, options)?,
        Mode::SolveSe => return Err(Error::config("solve-se does not produce run directories")),
    };

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.mode,
        config_hash: config.content_hash()?,
        config: echo,
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        horizons: config.horizons.clone(),
        seeds: config.seed_list().to_vec(),
        runs,
        equilibrium,
        bound_params,
        bounds,
        primary_bound: primary_bound(config),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    super::aggregate::aggregate_and_write(&dir, options.quiet)?;
    Ok(dir)
}

type Prepared = (Option<StackelbergEquilibrium>, Option<BoundParams>, Vec<HorizonBounds>);

fn simulate_all(config: &ExperimentConfig, dir: &Path, runs: &[RunEntry], options: &RunOptions) -> Result<Prepared> {
    let dist = Arc::new(JointDistribution::from_family(config.family()?)?);
    let se = solve_equilibrium(&dist)?;
    let supplier = config.supplier.clone().ok_or_else(|| Error::config("missing [supplier] section"))?;
    let retailer = config.retailer.clone().ok_or_else(|| Error::config("missing [retailer] section"))?;
    let mut params = BoundParams::from_distribution(&dist);
    if let SupplierSpec::Piyavskii { lipschitz } = &supplier {
        params = params.with_lipschitz(match lipschitz {
            Some(m) => *m,
            None => default_lipschitz(&dist)?,
        });
    }
    let bounds = config
        .horizons
        .iter()
        .map(|&h| {
            Ok(HorizonBounds { horizon: h, values: bound_table(&config.bounds, &params, h)?, gamma: None, eta: None })
        })
        .collect::<Result<Vec<_>>>()?;

    runs.par_iter()
        .map(|run| {
            let traj = simulate(&dist, &supplier, &retailer, run.horizon, SeedStreams::new(run.seed))?;
            traj.write_csv(&dir.join(&run.file))?;
            if !options.quiet {
                eprintln!("simulated T={} seed={}", run.horizon, run.seed);
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    Ok((Some(se), Some(params), bounds))
}

fn adversarial_all(config: &ExperimentConfig, dir: &Path, runs: &[RunEntry], options: &RunOptions) -> Result<Prepared> {
    let section = config.adversarial.as_ref().ok_or_else(|| Error::config("missing [adversarial] section"))?;
    let file_instance = match &section.instance {
        InstanceSource::File { path } => Some(AdversarialInstance::from_file(path)?),
        InstanceSource::PostedPrice(_) => None,
    };
    let rates =
        |h: usize| (section.gamma.unwrap_or_else(|| default_gamma(h)), section.eta.unwrap_or_else(|| default_eta(h)));
    let bounds = config
        .horizons
        .iter()
        .map(|&h| {
            let (gamma, eta) = rates(h);
            let params = BoundParams::default().with_exp3(gamma, eta);
            Ok(HorizonBounds {
                horizon: h,
                values: bound_table(&config.bounds, &params, h)?,
                gamma: Some(gamma),
                eta: Some(eta),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    runs.par_iter()
        .map(|run| {
            let streams = SeedStreams::new(run.seed);
            let instance = match (&file_instance, &section.instance) {
                (Some(inst), _) => inst.clone(),
                (None, InstanceSource::PostedPrice(g)) => g.generate(run.horizon, streams)?,
                (None, InstanceSource::File { .. }) => unreachable!("file instances are loaded up front"),
            };
            let (gamma, eta) = rates(run.horizon);
            run_adversarial(&instance, gamma, eta, streams)?.write_csv(&dir.join(&run.file))?;
            if !options.quiet {
                eprintln!("adversarial T={} seed={}", run.horizon, run.seed);
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    Ok((None, None, bounds))
}
