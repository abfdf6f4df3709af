use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_round, icbrt_ceil, RetailerPolicy, MIN_CUBE_ROOT_HORIZON};
use crate::error::{Error, Result};

/// Follow-the-Leader retailer on the grid `{k/(⌈T^{1/3}⌉+1)}`.
///
/// From round 2 on it maximizes `(1/(t−1)) Σ_s min(q, D_s)P_s − qW_t`, i.e. the
/// empirical expected utility at the current wholesale price.
#[derive(Debug, Clone)]
pub struct FollowTheLeader {
    horizon: usize,
    grid: Vec<f64>,
    revenue_sums: Vec<f64>,
    history: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl FollowTheLeader {
    pub fn new(horizon: usize, rng: ChaCha8Rng) -> Result<Self> {
        if horizon < MIN_CUBE_ROOT_HORIZON {
            return Err(Error::Precondition(format!(
                "horizon must be at least {MIN_CUBE_ROOT_HORIZON}, got {horizon}"
            )));
        }
        let n = icbrt_ceil(horizon);
        let grid: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        Ok(Self::with_grid(horizon, grid, rng))
    }

    /// Same policy on an explicit quantity grid (sorted ascending).
    pub fn with_grid(horizon: usize, grid: Vec<f64>, rng: ChaCha8Rng) -> Self {
        let revenue_sums = vec![0.0; grid.len()];
        Self { horizon, grid, revenue_sums, history: Vec::new(), rng }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Observed `(D_s, P_s)` pairs in round order.
    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }

    /// `ρ̂(w, q)` from the current history; `None` before any observation.
    pub fn estimate(&self, w: f64, q: f64) -> Option<f64> {
        if self.history.is_empty() {
            return None;
        }
        let sum: f64 = self.history.iter().map(|&(d, p)| q.min(d) * p).sum();
        Some(sum / self.history.len() as f64 - q * w)
    }

    /// Grid objective at price `w`, one entry per grid point.
    pub fn objective(&self, w: f64) -> Vec<f64> {
        let n = self.history.len() as f64;
        self.grid.iter().zip(&self.revenue_sums).map(|(&q, &s)| s / n - q * w).collect()
    }
}

impl RetailerPolicy for FollowTheLeader {
    fn name(&self) -> &'static str {
        "ftl"
    }

    fn act(&mut self, t: usize, wholesale: f64) -> Result<f64> {
        check_round(t, self.horizon)?;
        if t != self.history.len() + 1 {
            return Err(Error::Protocol(format!("round {t} requested after {} observations", self.history.len())));
        }
        if t == 1 {
            return Ok(self.grid[self.rng.random_range(0..self.grid.len())]);
        }
        let mut best = (f64::NEG_INFINITY, self.grid[0]);
        for (q, v) in self.grid.iter().zip(self.objective(wholesale)) {
            if v > best.0 {
                best = (v, *q);
            }
        }
        Ok(best.1)
    }

    fn observe(&mut self, t: usize, price: f64, demand: f64) -> Result<()> {
        check_round(t, self.horizon)?;
        if t != self.history.len() + 1 {
            return Err(Error::Protocol(format!("observation for round {t} out of order")));
        }
        for (q, s) in self.grid.iter().zip(self.revenue_sums.iter_mut()) {
            *s += q.min(demand) * price;
        }
        self.history.push((demand, price));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::JointDistribution;
    use crate::rng::{SeedStreams, Stream};

    fn rng(seed: u64) -> ChaCha8Rng {
        SeedStreams::new(seed).stream(Stream::Retailer)
    }

    #[test]
    fn grid_step_matches_horizon() {
        let f = FollowTheLeader::new(64, rng(0)).unwrap();
        assert_eq!(f.grid(), &[0.2, 0.4, 0.6, 0.8]);
        let f = FollowTheLeader::new(1000, rng(0)).unwrap();
        assert_eq!(f.grid().len(), 10);
        assert_eq!(f.grid()[0], 1.0 / 11.0);
        assert!(FollowTheLeader::new(11, rng(0)).is_err());
    }

    #[test]
    fn enumerated_objective_example() {
        let mut f = FollowTheLeader::with_grid(64, vec![0.25, 0.5, 0.75, 1.0], rng(1));
        let q1 = f.act(1, 0.1).unwrap();
        assert!(f.grid().contains(&q1));
        f.observe(1, 1.0, 0.5).unwrap();
        let oracle: Vec<f64> = [0.25f64, 0.5, 0.75, 1.0].iter().map(|&q| q.min(0.5) * 1.0 - q * 0.3).collect();
        for (a, b) in f.objective(0.3).iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((oracle[0] - 0.175).abs() < 1e-15 && (oracle[3] - 0.2).abs() < 1e-15);
        assert_eq!(f.act(2, 0.3).unwrap(), 0.5);
    }

    #[test]
    fn expensive_wholesale_picks_smallest_quantity() {
        let mut f = FollowTheLeader::new(64, rng(2)).unwrap();
        f.act(1, 0.5).unwrap();
        f.observe(1, 0.6, 0.9).unwrap();
        assert_eq!(f.act(2, 0.6).unwrap(), f.grid()[0]);
    }

    #[test]
    fn first_draw_is_seed_deterministic_and_covers_grid() {
        let draw = |seed| FollowTheLeader::new(64, rng(seed)).unwrap().act(1, 0.5).unwrap();
        assert_eq!(draw(7), draw(7));
        let mut seen: Vec<f64> = (0..200).map(draw).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen, vec![0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn estimate_is_unbiased() {
        let d = JointDistribution::uniform(0.2, 0.8).unwrap();
        let (w, q) = (0.4, 0.5);
        let truth = crate::stage_game::retailer_utility(&d, w, q);
        let reps = 4000;
        let streams = SeedStreams::new(99);
        let mut nature = streams.stream(Stream::Nature);
        let mut values = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut f = FollowTheLeader::new(12, rng(0)).unwrap();
            for t in 1..=5 {
                let (_, p, dem) = d.sample(&mut nature);
                f.act(t, w).unwrap();
                f.observe(t, p, dem).unwrap();
            }
            values.push(f.estimate(w, q).unwrap());
        }
        let mean = values.iter().sum::<f64>() / reps as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - truth).abs() < 3.0 * se, "mean {mean} truth {truth} se {se}");
    }

    #[test]
    fn running_sums_match_history() {
        let mut f = FollowTheLeader::new(27, rng(3)).unwrap();
        let data = [(0.9, 0.3), (0.5, 0.7), (0.8, 0.1)];
        for (t, &(p, d)) in data.iter().enumerate() {
            f.act(t + 1, 0.2).unwrap();
            f.observe(t + 1, p, d).unwrap();
        }
        for (&q, v) in f.grid().to_vec().iter().zip(f.objective(0.2)) {
            assert!((f.estimate(0.2, q).unwrap() - v).abs() < 1e-14);
        }
    }
}
