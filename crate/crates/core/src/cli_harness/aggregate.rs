use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Mode;
use super::runner::{Manifest, RunEntry, AGGREGATE_FILE};
use crate::distributions::JointDistribution;
use crate::error::{Error, Result};
use crate::repeated_game::{csv_error, l1_last_iterate, retailer_regret, supplier_regret, BoundKind, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, std, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compliance {
    pub bound: BoundKind,
    pub value: f64,
    /// Share of seeds whose regret is at most `value`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonAggregate {
    pub horizon: usize,
    pub seeds: usize,
    /// Set when only one seed is available, so `std` carries no information.
    pub small_sample: bool,
    /// Average supplier regret in simulate mode, cumulative welfare regret in
    /// adversarial mode.
    pub supplier_regret: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retailer_regret: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<Summary>,
    pub bounds: BTreeMap<BoundKind, f64>,
    pub compliance: Option<Compliance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mode: Mode,
    pub config_hash: String,
    pub horizons: Vec<HorizonAggregate>,
    /// Runs listed in the manifest whose trajectory file is absent.
    pub missing: Vec<PathBuf>,
}

struct RunMetrics {
    supplier: f64,
    retailer: Option<f64>,
    l1: Option<f64>,
}

/// Recomputes per-horizon statistics from the manifest and trajectory files.
pub fn aggregate(dir: &Path) -> Result<Aggregate> {
    let manifest = Manifest::read(dir)?;
    let mut missing = Vec::new();
    let mut by_horizon: BTreeMap<usize, Vec<RunMetrics>> = BTreeMap::new();
    let dist = match manifest.mode {
        Mode::Simulate => Some(JointDistribution::from_family(manifest.config.family()?)?),
        _ => None,
    };
    for run in &manifest.runs {
        let path = dir.join(&run.file);
        if !path.is_file() {
            missing.push(run.file.clone());
            continue;
        }
        let metrics = match &dist {
            Some(dist) => simulate_metrics(&manifest, dist, run, &path)?,
            None => RunMetrics { supplier: final_cumulative_regret(&path)?, retailer: None, l1: None },
        };
        by_horizon.entry(run.horizon).or_default().push(metrics);
    }

    let mut horizons = Vec::new();
    for hb in &manifest.bounds {
        let Some(runs) = by_horizon.get(&hb.horizon) else { continue };
        let supplier: Vec<f64> = runs.iter().map(|m| m.supplier).collect();
        let retailer: Vec<f64> = runs.iter().filter_map(|m| m.retailer).collect();
        let l1: Vec<f64> = runs.iter().filter_map(|m| m.l1).collect();
        let compliance = manifest.primary_bound.and_then(|kind| {
            hb.values.get(&kind).map(|&value| Compliance {
                bound: kind,
                value,
                fraction: supplier.iter().filter(|&&r| r <= value).count() as f64 / supplier.len() as f64,
            })
        });
        horizons.push(HorizonAggregate {
            horizon: hb.horizon,
            seeds: runs.len(),
            small_sample: runs.len() == 1,
            supplier_regret: Summary::of(&supplier).expect("at least one run"),
            retailer_regret: Summary::of(&retailer),
            l1: Summary::of(&l1),
            bounds: hb.values.clone(),
            compliance,
        });
    }
    Ok(Aggregate { mode: manifest.mode, config_hash: manifest.config_hash, horizons, missing })
}

/// Aggregates `dir` and writes `aggregate.json` next to the manifest.
pub fn aggregate_and_write(dir: &Path, quiet: bool) -> Result<Aggregate> {
    let agg = aggregate(dir)?;
    let path = dir.join(AGGREGATE_FILE);
    let json = serde_json::to_string_pretty(&agg)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    if !quiet {
        for file in &agg.missing {
            eprintln!("warning: missing run {}", file.display());
        }
    }
    Ok(agg)
}

fn simulate_metrics(manifest: &Manifest, dist: &JointDistribution, run: &RunEntry, path: &Path) -> Result<RunMetrics> {
    let se = manifest
        .equilibrium
        .as_ref()
        .ok_or_else(|| Error::Parse { path: path.to_path_buf(), message: "manifest has no equilibrium".into() })?;
    let traj = Trajectory::read_csv(path, run.seed)?;
    if traj.horizon() != run.horizon {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected {} rounds, found {}", run.horizon, traj.horizon()),
        });
    }
    Ok(RunMetrics {
        supplier: supplier_regret(&traj, se),
        retailer: Some(retailer_regret(&traj, se, dist)),
        l1: Some(l1_last_iterate(&traj, se)),
    })
}

fn final_cumulative_regret(path: &Path) -> Result<f64> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let column = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .position(|h| h == "cumulative_regret")
        .ok_or_else(|| Error::Parse { path: path.to_path_buf(), message: "no cumulative_regret column".into() })?;
    let mut last = None;
    for record in reader.records() {
        last = Some(record.map_err(|e| csv_error(path, e))?);
    }
    let record = last.ok_or_else(|| Error::Parse { path: path.to_path_buf(), message: "empty trajectory".into() })?;
    record[column]
        .parse()
        .map_err(|e| Error::Parse { path: path.to_path_buf(), message: format!("cumulative_regret: {e}") })
}
