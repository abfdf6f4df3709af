use super::{check_round, isqrt, SupplierPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtcPhase {
    Explore,
    Commit,
}

/// Explore-then-commit supplier that knows `E[C]`.
///
/// Sweeps `w_t = t/(⌊√T⌋ + 1)` for the first `⌊√T⌋` rounds, then commits to
/// the explored price with the largest noise-free value `q_s(w_s − E[C])`.
#[derive(Debug, Clone)]
pub struct ExploreThenCommit {
    horizon: usize,
    grid_size: usize,
    expected_cost: f64,
    observations: Vec<(f64, f64)>,
    committed: Option<f64>,
}

impl ExploreThenCommit {
    pub fn new(horizon: usize, expected_cost: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Precondition("horizon must be at least 1".into()));
        }
        Ok(Self { horizon, grid_size: isqrt(horizon), expected_cost, observations: Vec::new(), committed: None })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn phase(&self, t: usize) -> EtcPhase {
        if t <= self.grid_size {
            EtcPhase::Explore
        } else {
            EtcPhase::Commit
        }
    }

    /// Explored `(w_s, q_s)` pairs in round order.
    pub fn observations(&self) -> &[(f64, f64)] {
        &self.observations
    }

    pub fn committed_price(&self) -> Option<f64> {
        self.committed
    }

    fn commit(&mut self) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &(w, q) in &self.observations {
            let value = q * (w - self.expected_cost);
            if value > best.0 {
                best = (value, w);
            }
        }
        self.committed = Some(best.1);
        best.1
    }
}

impl SupplierPolicy for ExploreThenCommit {
    fn name(&self) -> &'static str {
        "etc"
    }

    fn act(&mut self, t: usize) -> Result<f64> {
        check_round(t, self.horizon)?;
        if t <= self.grid_size {
            return Ok(t as f64 / (self.grid_size + 1) as f64);
        }
        if let Some(w) = self.committed {
            return Ok(w);
        }
        if self.observations.len() < self.grid_size {
            return Err(Error::Protocol(format!(
                "commit requested after {} of {} exploration observations",
                self.observations.len(),
                self.grid_size
            )));
        }
        Ok(self.commit())
    }

    fn observe(&mut self, t: usize, quantity: f64, _cost: f64) -> Result<()> {
        check_round(t, self.horizon)?;
        if t <= self.grid_size {
            if t != self.observations.len() + 1 {
                return Err(Error::Protocol(format!("observation for round {t} out of order")));
            }
            self.observations.push((t as f64 / (self.grid_size + 1) as f64, quantity));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(etc: &mut ExploreThenCommit, quantities: &[f64]) {
        for (i, &q) in quantities.iter().enumerate() {
            etc.act(i + 1).unwrap();
            etc.observe(i + 1, q, 0.0).unwrap();
        }
    }

    #[test]
    fn explores_the_grid() {
        let mut etc = ExploreThenCommit::new(16, 0.2).unwrap();
        let ws: Vec<f64> = (1..=4).map(|t| etc.act(t).unwrap()).collect();
        assert_eq!(ws, vec![0.2, 0.4, 0.6, 0.8]);
        assert_eq!(etc.phase(4), EtcPhase::Explore);
        assert_eq!(etc.phase(5), EtcPhase::Commit);
    }

    #[test]
    fn commits_to_empirical_argmax() {
        // values q_s(w_s - 0.2) = 0, 0.14, 0.16, 0.06
        let q = [0.9, 0.7, 0.4, 0.1];
        let oracle = (0..4)
            .max_by(|&a, &b| {
                let va = q[a] * ((a + 1) as f64 / 5.0 - 0.2);
                let vb = q[b] * ((b + 1) as f64 / 5.0 - 0.2);
                va.partial_cmp(&vb).unwrap()
            })
            .unwrap();
        assert_eq!(oracle, 2);
        let mut etc = ExploreThenCommit::new(16, 0.2).unwrap();
        drive(&mut etc, &q);
        for t in 5..=16 {
            assert_eq!(etc.act(t).unwrap(), 0.6);
        }
    }

    #[test]
    fn zero_quantities_commit_to_first_point() {
        let mut etc = ExploreThenCommit::new(16, 0.0).unwrap();
        drive(&mut etc, &[0.0; 4]);
        assert_eq!(etc.act(5).unwrap(), 0.2);
    }

    #[test]
    fn non_square_horizon_uses_floor() {
        let etc = ExploreThenCommit::new(24, 0.2).unwrap();
        assert_eq!(etc.grid_size(), 4);
    }

    #[test]
    fn act_after_horizon_is_a_protocol_error() {
        let mut etc = ExploreThenCommit::new(4, 0.2).unwrap();
        drive(&mut etc, &[0.5, 0.5, 0.5, 0.5]);
        assert!(matches!(etc.act(5), Err(Error::Protocol(_))));
    }

    #[test]
    fn commit_before_exploration_finishes_is_rejected() {
        let mut etc = ExploreThenCommit::new(16, 0.2).unwrap();
        assert!(matches!(etc.act(5), Err(Error::Protocol(_))));
    }
}
