use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DemandCurve;
use crate::error::{Error, Result};
use crate::rng::{SeedStreams, Stream};

/// A cost sequence and a demand-curve sequence of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialInstance {
    pub costs: Vec<f64>,
    pub demands: Vec<DemandCurve>,
}

impl AdversarialInstance {
    pub fn new(costs: Vec<f64>, demands: Vec<DemandCurve>) -> Result<Self> {
        let inst = Self { costs, demands };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.costs.len() != self.demands.len() {
            return Err(Error::config("costs and demands must have the same length"));
        }
        if let Some(c) = self.costs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::config(format!("cost {c} outside [0, 1]")));
        }
        self.demands.iter().try_for_each(DemandCurve::validate)
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    /// Parses `cost<TAB>family<TAB>params` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut costs = Vec::new();
        let mut demands = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [cost, family, params] = fields.as_slice() else {
                return Err(err(n + 1, format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let c: f64 = cost.trim().parse().map_err(|e| err(n + 1, format!("bad cost `{cost}`: {e}")))?;
            if !(0.0..=1.0).contains(&c) {
                return Err(err(n + 1, format!("cost {c} outside [0, 1]")));
            }
            costs.push(c);
            demands.push(DemandCurve::parse(family.trim(), params).map_err(|m| err(n + 1, m))?);
        }
        if costs.is_empty() {
            return Err(err(0, "instance has no rounds".into()));
        }
        Ok(Self { costs, demands })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, d) in self.costs.iter().zip(&self.demands) {
            let _ = writeln!(out, "{c}\t{d}");
        }
        out
    }

    /// True when every round is a threshold (posted-price) curve.
    pub fn is_posted_price(&self) -> bool {
        self.demands.iter().all(|d| matches!(d, DemandCurve::Threshold { .. }))
    }
}

/// Law of the buyer valuation in a posted-price instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Valuations {
    Uniform {
        low: f64,
        high: f64,
    },
    /// `min(1, floor/U)` with `U` uniform: revenue `floor` at every price in `[floor, 1)`.
    EqualRevenue {
        floor: f64,
    },
}

/// Generates i.i.d. posted-price instances: threshold demand at a random valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostedPriceGenerator {
    pub valuations: Valuations,
    #[serde(default)]
    pub cost: f64,
}

impl PostedPriceGenerator {
    pub fn uniform(cost: f64) -> Self {
        Self { valuations: Valuations::Uniform { low: 0.0, high: 1.0 }, cost }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cost) {
            return Err(Error::config(format!("cost {} outside [0, 1]", self.cost)));
        }
        match self.valuations {
            Valuations::Uniform { low, high } if low.is_finite() && high.is_finite() && low < high => Ok(()),
            Valuations::EqualRevenue { floor } if floor > 0.0 && floor <= 1.0 => Ok(()),
            ref v => Err(Error::config(format!("invalid valuation law {v:?}"))),
        }
    }

    /// Round `t`'s valuation comes from block `t` of the instance stream.
    pub fn generate(&self, horizon: usize, streams: SeedStreams) -> Result<AdversarialInstance> {
        self.validate()?;
        let demands = (1..=horizon)
            .map(|t| {
                let mut rng = streams.round(Stream::Instance, t as u64);
                let v = match self.valuations {
                    Valuations::Uniform { low, high } => rng.random_range(low..high),
                    Valuations::EqualRevenue { floor } => {
                        let u: f64 = 1.0 - rng.random::<f64>();
                        (floor / u).min(1.0)
                    }
                };
                DemandCurve::Threshold { v }
            })
            .collect();
        AdversarialInstance::new(vec![self.cost; horizon], demands)
    }
}
