//! Supplier and retailer learning policies for the stochastic repeated game.
//!
//! Every policy is single-owner mutable state driven through `act` then
//! `observe` once per round, with rounds numbered from 1. All argmax ties go
//! to the smallest index or value so trajectories are reproducible.

mod best_response;
mod etc;
mod etc_no_cost;
mod ftl;
mod piyavskii;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use best_response::{ExactBestResponse, FixedPrice};
pub use etc::{EtcPhase, ExploreThenCommit};
pub use etc_no_cost::ExploreThenCommitNoCost;
pub use ftl::FollowTheLeader;
pub use piyavskii::PiyavskiiShubert;

use crate::distributions::JointDistribution;
use crate::error::{Error, Result};
use crate::rng::{SeedStreams, Stream};

/// Smallest horizon accepted by the learners that grid on `T^{1/3}`.
pub const MIN_CUBE_ROOT_HORIZON: usize = 12;

pub trait SupplierPolicy: Send {
    fn name(&self) -> &'static str;

    /// Wholesale price for round `t`, chosen before the order is known.
    fn act(&mut self, t: usize) -> Result<f64>;

    /// Feedback after round `t`: the retailer's order and the realized cost.
    fn observe(&mut self, t: usize, quantity: f64, cost: f64) -> Result<()>;
}

pub trait RetailerPolicy: Send {
    fn name(&self) -> &'static str;

    /// Order quantity for round `t` given the posted wholesale price.
    fn act(&mut self, t: usize, wholesale: f64) -> Result<f64>;

    /// Feedback after round `t`: retail price and demand.
    fn observe(&mut self, t: usize, price: f64, demand: f64) -> Result<()>;
}

/// `⌊√n⌋`, exact for every `u64`-sized input.
pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `⌈∛n⌉`.
pub fn icbrt_ceil(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r > 0 && (r - 1).pow(3) >= n {
        r -= 1;
    }
    while r.pow(3) < n {
        r += 1;
    }
    r
}

fn check_round(t: usize, horizon: usize) -> Result<()> {
    if t == 0 || t > horizon {
        Err(Error::Protocol(format!("round {t} outside 1..={horizon}")))
    } else {
        Ok(())
    }
}

/// Supplier policy as named in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SupplierSpec {
    Etc {},
    Piyavskii {
        /// Lipschitz constant; defaults to `(1 − E[C])/(E[P]L) + 1`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    EtcNoCost {},
    Fixed {
        w: f64,
    },
}

/// Retailer policy as named in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RetailerSpec {
    BestResponse {},
    Ftl {},
}

impl SupplierSpec {
    pub fn min_horizon(&self) -> usize {
        match self {
            Self::EtcNoCost {} => MIN_CUBE_ROOT_HORIZON,
            _ => 1,
        }
    }

    pub fn build(&self, dist: &JointDistribution, horizon: usize) -> Result<Box<dyn SupplierPolicy>> {
        let ec = dist.expected_cost().value;
        Ok(match self {
            Self::Etc {} => Box::new(ExploreThenCommit::new(horizon, ec)?),
            Self::Piyavskii { lipschitz } => {
                let m = match lipschitz {
                    Some(m) => *m,
                    None => default_lipschitz(dist)?,
                };
                Box::new(PiyavskiiShubert::new(horizon, m, ec)?)
            }
            Self::EtcNoCost {} => Box::new(ExploreThenCommitNoCost::new(horizon)?),
            Self::Fixed { w } => Box::new(FixedPrice::new(*w)?),
        })
    }
}

impl RetailerSpec {
    pub fn min_horizon(&self) -> usize {
        match self {
            Self::Ftl {} => MIN_CUBE_ROOT_HORIZON,
            Self::BestResponse {} => 1,
        }
    }

    pub fn build(
        &self,
        dist: &Arc<JointDistribution>,
        horizon: usize,
        streams: SeedStreams,
    ) -> Result<Box<dyn RetailerPolicy>> {
        Ok(match self {
            Self::BestResponse {} => Box::new(ExactBestResponse::new(dist.clone())?),
            Self::Ftl {} => Box::new(FollowTheLeader::new(horizon, streams.stream(Stream::Retailer))?),
        })
    }
}

/// `M = (1 − E[C])/(E[P]L) + 1`, a Lipschitz constant of the supplier's value.
pub fn default_lipschitz(dist: &JointDistribution) -> Result<f64> {
    let floor =
        dist.density_floor().ok_or_else(|| Error::config("the default Lipschitz constant needs a density floor L"))?;
    let (ec, ep) = (dist.expected_cost().value, dist.expected_price().value);
    Ok((1.0 - ec) / (ep * floor) + 1.0)
}
