use super::{check_round, icbrt_ceil, SupplierPolicy, MIN_CUBE_ROOT_HORIZON};
use crate::error::{Error, Result};

/// Explore-then-commit supplier that estimates `E[C]` from observed costs.
///
/// With `n = ⌈T^{1/3}⌉` it sweeps `s/(n+1)` for `s = 1..n`, `n + 1` times. The
/// first `n²` costs give `ĉ`; the commit index maximizes `Q_s(W_s − ĉ)` over the
/// final pass only.
#[derive(Debug, Clone)]
pub struct ExploreThenCommitNoCost {
    horizon: usize,
    grid_size: usize,
    prices: Vec<f64>,
    quantities: Vec<f64>,
    costs: Vec<f64>,
    estimated_cost: Option<f64>,
    committed: Option<f64>,
}

impl ExploreThenCommitNoCost {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < MIN_CUBE_ROOT_HORIZON {
            return Err(Error::Precondition(format!(
                "horizon must be at least {MIN_CUBE_ROOT_HORIZON}, got {horizon}"
            )));
        }
        Ok(Self {
            horizon,
            grid_size: icbrt_ceil(horizon),
            prices: Vec::new(),
            quantities: Vec::new(),
            costs: Vec::new(),
            estimated_cost: None,
            committed: None,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn exploration_rounds(&self) -> usize {
        self.grid_size * (self.grid_size + 1)
    }

    /// Number of leading costs averaged into `ĉ`.
    pub fn cost_sample_size(&self) -> usize {
        self.grid_size * self.grid_size
    }

    pub fn estimated_cost(&self) -> Option<f64> {
        self.estimated_cost
    }

    pub fn committed_price(&self) -> Option<f64> {
        self.committed
    }

    fn explore_price(&self, t: usize) -> f64 {
        let s = (t - 1) % self.grid_size + 1;
        s as f64 / (self.grid_size + 1) as f64
    }

    fn commit(&mut self) {
        let m = self.cost_sample_size();
        let c_hat = self.costs[..m].iter().sum::<f64>() / m as f64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for s in m..self.exploration_rounds() {
            let value = self.quantities[s] * (self.prices[s] - c_hat);
            if value > best.0 {
                best = (value, self.prices[s]);
            }
        }
        self.estimated_cost = Some(c_hat);
        self.committed = Some(best.1);
    }
}

impl SupplierPolicy for ExploreThenCommitNoCost {
    fn name(&self) -> &'static str {
        "etc-no-cost"
    }

    fn act(&mut self, t: usize) -> Result<f64> {
        check_round(t, self.horizon)?;
        if t <= self.exploration_rounds() {
            return Ok(self.explore_price(t));
        }
        self.committed.ok_or_else(|| {
            Error::Protocol(format!(
                "commit requested after {} of {} exploration observations",
                self.quantities.len(),
                self.exploration_rounds()
            ))
        })
    }

    fn observe(&mut self, t: usize, quantity: f64, cost: f64) -> Result<()> {
        check_round(t, self.horizon)?;
        if t > self.exploration_rounds() {
            return Ok(());
        }
        if t != self.quantities.len() + 1 {
            return Err(Error::Protocol(format!("observation for round {t} out of order")));
        }
        self.prices.push(self.explore_price(t));
        self.quantities.push(quantity);
        self.costs.push(cost);
        if t == self.exploration_rounds() {
            self.commit();
        }
        Ok(())
    }
}
