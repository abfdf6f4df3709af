//! The stochastic repeated game: round loop, trajectories, regret metrics and
//! the closed-form bound curves the learners are checked against.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::JointDistribution;
use crate::error::{Error, Result};
use crate::learners::{RetailerPolicy, RetailerSpec, SupplierPolicy, SupplierSpec};
use crate::rng::{SeedStreams, Stream};
use crate::stage_game::{self, StackelbergEquilibrium};
use crate::vertical_integration::action_grid_size;

/// One round of play. Column order is the CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub w: f64,
    pub q: f64,
    pub c: f64,
    pub p: f64,
    pub d: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl RoundRecord {
    pub fn new(t: usize, w: f64, q: f64, c: f64, p: f64, d: f64) -> Self {
        Self { t, w, q, c, p, d, sigma: q * w - q * c, rho: q.min(d) * p - q * w }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&RoundRecord> {
        self.records.last()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.records.iter().map(|r| {
            let mut row = vec![r.t.to_string()];
            row.extend([r.w, r.q, r.c, r.p, r.d, r.sigma, r.rho].map(fmt_float));
            row
        });
        write_rows(path, &["t", "w", "q", "c", "p", "d", "sigma", "rho"], rows)
    }

    pub fn read_csv(path: &Path, seed: u64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<RoundRecord>, _>>()
            .map_err(|e| csv_error(path, e))?;
        Ok(Self { seed, records })
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse { path: path.to_path_buf(), message: e.to_string() }
}

/// 17 significant digits: enough to round-trip every `f64`.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn check_action(kind: &str, t: usize, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Protocol(format!("{kind} {x} at round {t} outside [0, 1]")))
    }
}

/// Plays `horizon` rounds. Nature's draw for round `t` comes from its own block
/// of the nature stream, so it does not depend on the policies.
pub fn run_episode(
    dist: &JointDistribution,
    supplier: &mut dyn SupplierPolicy,
    retailer: &mut dyn RetailerPolicy,
    horizon: usize,
    streams: SeedStreams,
) -> Result<Trajectory> {
    dist.require_bounded()?;
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (c, p, d) = dist.sample(&mut streams.round(Stream::Nature, t as u64));
        let w = supplier.act(t)?;
        check_action("wholesale price", t, w)?;
        let q = retailer.act(t, w)?;
        check_action("quantity", t, q)?;
        supplier.observe(t, q, c)?;
        retailer.observe(t, p, d)?;
        records.push(RoundRecord::new(t, w, q, c, p, d));
    }
    Ok(Trajectory { seed: streams.seed(), records })
}

/// Builds both policies from their specs and plays one episode.
pub fn simulate(
    dist: &Arc<JointDistribution>,
    supplier: &SupplierSpec,
    retailer: &RetailerSpec,
    horizon: usize,
    streams: SeedStreams,
) -> Result<Trajectory> {
    let mut s = supplier.build(dist, horizon)?;
    let mut r = retailer.build(dist, horizon, streams)?;
    run_episode(dist, s.as_mut(), r.as_mut(), horizon, streams)
}

/// `E[σ(w★; q★, C)]` minus the mean realized supplier utility.
pub fn supplier_regret(trajectory: &Trajectory, se: &StackelbergEquilibrium) -> f64 {
    let n = trajectory.records.len() as f64;
    se.supplier_utility - trajectory.records.iter().map(|r| r.sigma).sum::<f64>() / n
}

/// `E[ρ(q★; w★, P, D)]` minus the mean of `E[ρ(q_t; w_t, P, D) | w_t]`.
pub fn retailer_regret(trajectory: &Trajectory, se: &StackelbergEquilibrium, dist: &JointDistribution) -> f64 {
    let n = trajectory.records.len() as f64;
    let realized: f64 = trajectory.records.iter().map(|r| stage_game::retailer_utility(dist, r.w, r.q)).sum();
    se.retailer_utility - realized / n
}

/// `|w★ − w_T| + |q★ − q_T|`.
pub fn l1_last_iterate(trajectory: &Trajectory, se: &StackelbergEquilibrium) -> f64 {
    trajectory.last().map_or(f64::NAN, |r| (se.w_star - r.w).abs() + (se.q_star - r.q).abs())
}

/// Per-round gap `f★ − q_t(w_t − E[C])`; with a best-responding retailer this is
/// the simple regret of the supplier's query at round `t`.
pub fn simple_regret_curve(trajectory: &Trajectory, se: &StackelbergEquilibrium, expected_cost: f64) -> Vec<f64> {
    trajectory.records.iter().map(|r| se.supplier_utility - r.q * (r.w - expected_cost)).collect()
}

/// Closed-form regret bounds, named by the learner they certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// ETC average supplier regret, `((1−E[C])/(E[P]L) + 2) T^{−1/2}`.
    Etc,
    /// ETC last-iterate distance, `((E[P]L)^{−1} + 1) T^{−1/2}`.
    EtcLastIterate,
    /// Piyavskii–Shubert simple regret at round `t`, `9M log₂(Mt)/t`.
    PiyavskiiSimple,
    /// Piyavskii–Shubert average regret, `2M ln(4T)/T`.
    Piyavskii,
    /// ETC without `E[C]` against FTL, `(16 + (1−E[C])/(E[P]L) + 7√ln T) T^{−1/3}`.
    EtcFtl,
    /// Exp3-VI cumulative regret, `ηKT ln(eK/γ) + 4 ln(K+1)/η + 4γT`.
    Exp3Vi,
    /// Exp3-VI with the tuned rates, `3(4 + 3 ln T) T^{2/3}`.
    Exp3ViSimplified,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        Self::Etc,
        Self::EtcLastIterate,
        Self::PiyavskiiSimple,
        Self::Piyavskii,
        Self::EtcFtl,
        Self::Exp3Vi,
        Self::Exp3ViSimplified,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Etc => "etc",
            Self::EtcLastIterate => "etc-last-iterate",
            Self::PiyavskiiSimple => "piyavskii-simple",
            Self::Piyavskii => "piyavskii",
            Self::EtcFtl => "etc-ftl",
            Self::Exp3Vi => "exp3-vi",
            Self::Exp3ViSimplified => "exp3-vi-simplified",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s).ok_or_else(|| Error::config(format!("unknown bound id `{s}`")))
    }
}

/// Instance constants the bounds depend on. Unused fields may stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub expected_cost: f64,
    pub expected_price: f64,
    pub density_floor: Option<f64>,
    pub lipschitz: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
}

impl BoundParams {
    pub fn from_distribution(dist: &JointDistribution) -> Self {
        Self {
            expected_cost: dist.expected_cost().value,
            expected_price: dist.expected_price().value,
            density_floor: dist.density_floor(),
            ..Self::default()
        }
    }

    pub fn with_lipschitz(mut self, m: f64) -> Self {
        self.lipschitz = Some(m);
        self
    }

    pub fn with_exp3(mut self, gamma: f64, eta: f64) -> Self {
        self.gamma = Some(gamma);
        self.eta = Some(eta);
        self
    }

    fn floor(&self) -> Result<f64> {
        let l = self.density_floor.ok_or_else(|| Error::config("bound needs a density floor L"))?;
        if !(l > 0.0) {
            return Err(Error::config(format!("density floor must be positive, got {l}")));
        }
        if !(self.expected_price > 0.0 && self.expected_cost >= 0.0 && self.expected_cost < self.expected_price) {
            return Err(Error::config(format!(
                "bound needs 0 <= E[C] < E[P], got E[C]={} E[P]={}",
                self.expected_cost, self.expected_price
            )));
        }
        Ok(l)
    }

    /// `(1 − E[C])/(E[P]L)`.
    fn cost_ratio(&self) -> Result<f64> {
        Ok((1.0 - self.expected_cost) / (self.expected_price * self.floor()?))
    }

    fn lipschitz(&self) -> Result<f64> {
        match self.lipschitz {
            Some(m) if m > 0.0 => Ok(m),
            Some(m) => Err(Error::config(format!("Lipschitz constant must be positive, got {m}"))),
            None => Ok(self.cost_ratio()? + 1.0),
        }
    }

    fn exp3(&self) -> Result<(f64, f64)> {
        match (self.gamma, self.eta) {
            (Some(g), Some(e)) if g > 0.0 && g <= 1.0 && e > 0.0 => Ok((g, e)),
            _ => Err(Error::config("exp3-vi bound needs gamma in (0, 1] and eta > 0")),
        }
    }
}

/// Bound `kind` evaluated at horizon (or round) `t ≥ 1`.
pub fn bound_value(kind: BoundKind, params: &BoundParams, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::config("bounds are defined for t >= 1"));
    }
    let tf = t as f64;
    Ok(match kind {
        BoundKind::Etc => (params.cost_ratio()? + 2.0) / tf.sqrt(),
        BoundKind::EtcLastIterate => (1.0 / (params.expected_price * params.floor()?) + 1.0) / tf.sqrt(),
        BoundKind::PiyavskiiSimple => {
            let m = params.lipschitz()?;
            9.0 * m * (m * tf).log2() / tf
        }
        BoundKind::Piyavskii => 2.0 * params.lipschitz()? * (4.0 * tf).ln() / tf,
        BoundKind::EtcFtl => (16.0 + params.cost_ratio()? + 7.0 * tf.ln().sqrt()) / tf.cbrt(),
        BoundKind::Exp3Vi => {
            let (gamma, eta) = params.exp3()?;
            let k = action_grid_size(gamma) as f64;
            eta * k * tf * (std::f64::consts::E * k / gamma).ln() + 4.0 * (k + 1.0).ln() / eta + 4.0 * gamma * tf
        }
        BoundKind::Exp3ViSimplified => 3.0 * (4.0 + 3.0 * tf.ln()) * tf.powf(2.0 / 3.0),
    })
}

/// `bound_value` at `t = 1..=horizon`.
pub fn bound_curve(kind: BoundKind, params: &BoundParams, horizon: usize) -> Result<Vec<f64>> {
    (1..=horizon).map(|t| bound_value(kind, params, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub horizon: usize,
    pub supplier_avg_regret: f64,
    pub retailer_avg_regret: f64,
    pub l1_last_iterate: f64,
    pub bound_name: BoundKind,
    pub bound_curve: Vec<f64>,
}

impl RegretReport {
    pub fn compute(
        trajectory: &Trajectory,
        dist: &JointDistribution,
        se: &StackelbergEquilibrium,
        bound: BoundKind,
        params: &BoundParams,
    ) -> Result<Self> {
        let horizon = trajectory.horizon();
        Ok(Self {
            horizon,
            supplier_avg_regret: supplier_regret(trajectory, se),
            retailer_avg_regret: retailer_regret(trajectory, se, dist),
            l1_last_iterate: l1_last_iterate(trajectory, se),
            bound_name: bound,
            bound_curve: bound_curve(bound, params, horizon)?,
        })
    }

    /// The bound at the report's own horizon.
    pub fn bound_at_horizon(&self) -> f64 {
        self.bound_curve.last().copied().unwrap_or(f64::NAN)
    }
}
