use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{loss, welfare};
use crate::error::{Error, Result};

/// Weight total below which all weights are renormalized against the smallest
/// cumulative loss.
const REBASE_THRESHOLD: f64 = 1e-150;

/// `K = ⌈1/γ⌉`.
pub fn action_grid_size(gamma: f64) -> usize {
    // guard against 1/γ landing a hair above an integer
    ((1.0 / gamma) - 1e-12).ceil().max(1.0) as usize
}

/// Zero-based action `(i, j)`: price index `i < K`, quantity index `j ≤ K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub i: usize,
    pub j: usize,
}

/// Exponential weights over the `K × (K+1)` price–quantity grid, with forced
/// exploration on the full-quantity column and censored-feedback estimates.
#[derive(Debug, Clone)]
pub struct Exp3Vi {
    gamma: f64,
    eta: f64,
    k: usize,
    prices: Vec<f64>,
    quantities: Vec<f64>,
    cum_loss: Vec<f64>,
    weights: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
    base: f64,
}

impl Exp3Vi {
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("eta must be positive, got {eta}")));
        }
        let k = action_grid_size(gamma);
        let prices = (0..k).map(|i| i as f64 * gamma).collect();
        let mut quantities: Vec<f64> = (0..k).map(|j| j as f64 * gamma).collect();
        quantities.push(1.0);
        let n = k * (k + 1);
        Ok(Self {
            gamma,
            eta,
            k,
            prices,
            quantities,
            cum_loss: vec![0.0; n],
            weights: vec![1.0; n],
            row_sums: vec![(k + 1) as f64; k],
            total: n as f64,
            base: 0.0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `K`, the number of grid prices.
    pub fn grid_size(&self) -> usize {
        self.k
    }

    pub fn action_count(&self) -> usize {
        self.k * (self.k + 1)
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn quantities(&self) -> &[f64] {
        &self.quantities
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cum_loss
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.k + 1) + j
    }

    /// `π_t` in row-major `(i, j)` order.
    pub fn pi(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.total).collect()
    }

    /// `μ_t = (1 − γ)π_t + (γ/K)·1{j = K+1}` in row-major order.
    pub fn mu(&self) -> Vec<f64> {
        let mut mu: Vec<f64> = self.pi().into_iter().map(|p| (1.0 - self.gamma) * p).collect();
        for i in 0..self.k {
            let at = self.idx(i, self.k);
            mu[at] += self.gamma / self.k as f64;
        }
        mu
    }

    fn mu_at(&self, i: usize, j: usize) -> f64 {
        let extra = if j == self.k { self.gamma / self.k as f64 } else { 0.0 };
        (1.0 - self.gamma) * self.weights[self.idx(i, j)] / self.total + extra
    }

    /// Inverse-CDF draw from `μ_t`: row first, then column.
    pub fn sample(&self, rng: &mut impl Rng) -> Action {
        let u: f64 = rng.random();
        let explore = self.gamma / self.k as f64;
        let mut acc = 0.0;
        let mut row = self.k - 1;
        for i in 0..self.k {
            acc += (1.0 - self.gamma) * self.row_sums[i] / self.total + explore;
            if u < acc {
                row = i;
                break;
            }
        }
        let row_mass = (1.0 - self.gamma) * self.row_sums[row] / self.total + explore;
        let target = (u - (acc - row_mass)).max(0.0);
        let mut acc = 0.0;
        for j in 0..=self.k {
            acc += self.mu_at(row, j);
            if target < acc {
                return Action { i: row, j };
            }
        }
        Action { i: row, j: self.k }
    }

    /// Losses `ℓ_t(I_t, j)` for `j ≤ J_t`, rebuilt from the censored sale
    /// `min(Q_t, d_t(P_t))` and the cost.
    pub fn row_losses(&self, action: Action, feedback: f64, cost: f64) -> Result<Vec<f64>> {
        let q = self.quantities[action.j];
        if !(0.0..=q).contains(&feedback) {
            return Err(Error::Protocol(format!("censored feedback {feedback} outside [0, {q}]")));
        }
        let p = self.prices[action.i];
        Ok(self.quantities[..=action.j].iter().map(|&qj| loss(welfare(p, qj, cost, feedback))).collect())
    }

    /// Adds `ℓ̂_t` to the cumulative losses and refreshes row `I_t`.
    pub fn update(&mut self, action: Action, feedback: f64, cost: f64) -> Result<()> {
        let losses = self.row_losses(action, feedback, cost)?;
        let row: Vec<f64> = (0..=self.k).map(|j| self.mu_at(action.i, j)).collect();
        let estimates = row_estimates(&row, action.j, &losses);
        let start = self.idx(action.i, 0);
        for (j, e) in estimates.into_iter().enumerate() {
            self.cum_loss[start + j] += e;
        }
        self.refresh_row(action.i);
        self.total = self.row_sums.iter().sum();
        if self.total < REBASE_THRESHOLD {
            self.base = self.cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
            for i in 0..self.k {
                self.refresh_row(i);
            }
            self.total = self.row_sums.iter().sum();
        }
        Ok(())
    }

    fn refresh_row(&mut self, i: usize) {
        let start = self.idx(i, 0);
        let mut sum = 0.0;
        for j in 0..=self.k {
            let w = (-self.eta * (self.cum_loss[start + j] - self.base)).exp();
            self.weights[start + j] = w;
            sum += w;
        }
        self.row_sums[i] = sum;
    }
}

/// `ℓ̂(I_t, j) = ℓ(I_t, j) / Σ_{k ≥ j} μ(I_t, k)` for `j ≤ J_t`, zero elsewhere on
/// the row. `row_mu` is `μ_t(I_t, ·)`; `losses` covers at least `0..=j_t`.
pub fn row_estimates(row_mu: &[f64], j_t: usize, losses: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; row_mu.len()];
    let mut tail = 0.0;
    let mut tails = vec![0.0; row_mu.len()];
    for j in (0..row_mu.len()).rev() {
        tail += row_mu[j];
        tails[j] = tail;
    }
    for j in 0..=j_t {
        out[j] = losses[j] / tails[j];
    }
    out
}
