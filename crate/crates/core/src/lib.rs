//! Simulation laboratory for repeated supplier–retailer Stackelberg games.
//!
//! * [`distributions`]: the joint law of cost, retail price and demand.
//! * [`stage_game`]: one-shot utilities, best responses, the Stackelberg
//!   equilibrium and the price of anarchy.
//! * [`learners`]: supplier and retailer learning policies.
//! * [`repeated_game`]: the stochastic repeated protocol, regret metrics and
//!   theoretical bound curves.
//! * [`vertical_integration`]: the adversarial protocol with censored demand
//!   and the Exp3-VI learner.
//! * [`cli_harness`]: config-driven experiment orchestration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli_harness;
pub mod distributions;
pub mod error;
pub mod learners;
pub mod repeated_game;
pub mod rng;
pub mod stage_game;
pub mod vertical_integration;

pub use distributions::{CustomLaw, DemandFamily, Estimate, JointDistribution};
pub use error::{Error, Result};
pub use rng::{SeedStreams, Stream};
pub use stage_game::{PriceOfAnarchy, StackelbergEquilibrium};
