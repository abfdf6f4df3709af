//! The adversarial protocol with censored demand when the supplier sells at
//! cost: demand curves, instances, the Exp3-VI learner and its regret harness.

mod demand;
mod exp3vi;
mod instance;
mod oracle;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use demand::DemandCurve;
pub use exp3vi::{action_grid_size, row_estimates, Action, Exp3Vi};
pub use instance::{AdversarialInstance, PostedPriceGenerator, Valuations};
pub use oracle::{
    best_fixed_action, best_grid_action, cumulative_welfare, discretization_gap, DiscretizationGap, FixedAction,
    LINEAR_PRICE_STEP,
};

use crate::error::{Error, Result};
use crate::repeated_game::{bound_value, fmt_float, write_rows, BoundKind, BoundParams};
use crate::rng::{SeedStreams, Stream};

/// `min(q, d)·p − q·c`.
pub fn welfare(p: f64, q: f64, c: f64, d: f64) -> f64 {
    q.min(d) * p - q * c
}

/// Maps welfare in `[−1, 1]` to a loss in `[0, 1]`.
pub fn loss(welfare: f64) -> f64 {
    (1.0 - welfare) / 2.0
}

/// `γ = T^{−1/3}`.
pub fn default_gamma(horizon: usize) -> f64 {
    (horizon as f64).powf(-1.0 / 3.0)
}

/// `η = T^{−2/3}`.
pub fn default_eta(horizon: usize) -> f64 {
    (horizon as f64).powf(-2.0 / 3.0)
}

/// One adversarial round; `i` and `j` are 1-based grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViRoundRecord {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub q: f64,
    pub feedback: f64,
    pub welfare: f64,
    pub cumulative_regret: f64,
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialRun {
    pub seed: u64,
    pub gamma: f64,
    pub eta: f64,
    pub best_fixed: FixedAction,
    pub records: Vec<ViRoundRecord>,
}

impl AdversarialRun {
    /// Cumulative regret against the best fixed action over the full horizon.
    pub fn regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_regret)
    }

    pub fn bound(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.bound_value)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = ["t", "I", "J", "P", "Q", "feedback", "welfare", "cumulative_regret", "bound_value"];
        let rows = self.records.iter().map(|r| {
            let mut row = vec![r.t.to_string(), r.i.to_string(), r.j.to_string()];
            row.extend([r.p, r.q, r.feedback, r.welfare, r.cumulative_regret, r.bound_value].map(fmt_float));
            row
        });
        write_rows(path, &header, rows)
    }
}

/// Runs Exp3-VI over `instance`. The learner sees only the censored sale and
/// the cost of each round.
pub fn run_adversarial(
    instance: &AdversarialInstance,
    gamma: f64,
    eta: f64,
    streams: SeedStreams,
) -> Result<AdversarialRun> {
    instance.validate()?;
    let mut learner = Exp3Vi::new(gamma, eta)?;
    let best_fixed = best_fixed_action(instance);
    let params = BoundParams::default().with_exp3(gamma, eta);
    let mut rng = streams.stream(Stream::Learner);
    let mut records = Vec::with_capacity(instance.horizon());
    let mut regret = 0.0;
    for (t0, (&c, demand)) in instance.costs.iter().zip(&instance.demands).enumerate() {
        let t = t0 + 1;
        let action = learner.sample(&mut rng);
        let (p, q) = (learner.prices()[action.i], learner.quantities()[action.j]);
        let d = demand.eval(p);
        let feedback = q.min(d);
        learner.update(action, feedback, c)?;
        let w = welfare(p, q, c, d);
        regret += welfare(best_fixed.p, best_fixed.q, c, demand.eval(best_fixed.p)) - w;
        records.push(ViRoundRecord {
            t,
            i: action.i + 1,
            j: action.j + 1,
            p,
            q,
            feedback,
            welfare: w,
            cumulative_regret: regret,
            bound_value: bound_value(BoundKind::Exp3Vi, &params, t)?,
        });
    }
    Ok(AdversarialRun { seed: streams.seed(), gamma, eta, best_fixed, records })
}

/// Runs exponential weights on `losses` (`losses[t][i]`) and returns
/// `min_k (ln K/η + (η/2) Σ_t Σ_i p_t(i)ℓ_t(i)² − Σ_t Σ_i p_t(i)ℓ_t(i) + Σ_t ℓ_t(k))`.
pub fn exponential_weights_slack(losses: &[Vec<f64>], eta: f64) -> Result<f64> {
    let k = losses.first().map_or(0, Vec::len);
    if k == 0 || losses.iter().any(|row| row.len() != k) {
        return Err(Error::Precondition("loss rows must be non-empty and of equal length".into()));
    }
    if losses.iter().flatten().any(|&l| !(l >= 0.0)) {
        return Err(Error::Precondition("losses must be nonnegative".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::Precondition(format!("eta must be positive, got {eta}")));
    }
    let mut cumulative = vec![0.0; k];
    let (mut learner_loss, mut second_moment) = (0.0, 0.0);
    for row in losses {
        let m = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = cumulative.iter().map(|l| (-eta * (l - m)).exp()).collect();
        let z: f64 = w.iter().sum();
        for ((wi, &l), c) in w.iter().zip(row).zip(cumulative.iter_mut()) {
            let p = wi / z;
            learner_loss += p * l;
            second_moment += p * l * l;
            *c += l;
        }
    }
    let rhs = (k as f64).ln() / eta + eta / 2.0 * second_moment;
    Ok(cumulative.iter().map(|&lk| rhs - (learner_loss - lk)).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn welfare_and_loss_examples() {
        assert_eq!(welfare(0.5, 1.0, 0.0, 1.0), 0.5);
        assert_eq!(welfare(0.7, 1.0, 0.0, DemandCurve::Threshold { v: 0.5 }.eval(0.7)), 0.0);
        let w = welfare(0.4, 0.8, 0.5, 0.3);
        assert!((w + 0.28).abs() < 1e-15);
        assert!((loss(w) - 0.64).abs() < 1e-15);
        assert_eq!((loss(1.0), loss(-1.0)), (0.0, 1.0));
    }

    #[test]
    fn exponential_weights_slack_examples() {
        let t = 40;
        let eta = 0.3;
        let slack = exponential_weights_slack(&vec![vec![0.5; 4]; t], eta).unwrap();
        assert!((slack - (4f64.ln() / eta + eta * t as f64 / 8.0)).abs() < 1e-12);
        let slack = exponential_weights_slack(&vec![vec![0.7]; t], eta).unwrap();
        assert!((slack - eta * t as f64 * 0.49 / 2.0).abs() < 1e-12);
        assert!(exponential_weights_slack(&[vec![0.1, -0.1]], eta).is_err());
    }

    #[test]
    fn exponential_weights_inequality_holds_on_random_sequences() {
        let mut rng = SeedStreams::new(21).stream(Stream::Instance);
        for _ in 0..100 {
            let losses: Vec<Vec<f64>> = (0..200).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
            assert!(exponential_weights_slack(&losses, 0.1).unwrap() >= 0.0);
        }
    }

    #[test]
    fn adversarial_run_structure() {
        let inst = PostedPriceGenerator::uniform(0.0).generate(500, SeedStreams::new(3)).unwrap();
        let (gamma, eta) = (default_gamma(500), default_eta(500));
        let run = run_adversarial(&inst, gamma, eta, SeedStreams::new(3)).unwrap();
        assert_eq!(run.records.len(), 500);
        assert_eq!(run, run_adversarial(&inst, gamma, eta, SeedStreams::new(3)).unwrap());
        for r in &run.records {
            assert!(r.feedback <= r.q && (-1.0..=1.0).contains(&r.welfare));
        }
        let realized: f64 = run.records.iter().map(|r| r.welfare).sum();
        assert!((run.regret() - (run.best_fixed.welfare - realized)).abs() < 1e-9);
        assert!(run.regret() <= run.bound());
    }

    proptest! {
        #[test]
        fn censored_losses_match_full_information(
            gamma in 0.05f64..1.0,
            v in 0.0f64..1.0,
            a in 0.0f64..1.5,
            b in 0.0f64..2.0,
            c in 0.0f64..1.0,
            u in 0.0f64..1.0,
            w in 0.0f64..1.0,
            linear in any::<bool>(),
        ) {
            let e = Exp3Vi::new(gamma, 0.1).unwrap();
            let k = e.grid_size();
            let action = Action { i: ((u * k as f64) as usize).min(k - 1), j: ((w * (k + 1) as f64) as usize).min(k) };
            let demand = if linear { DemandCurve::Linear { a, b } } else { DemandCurve::Threshold { v } };
            let p = e.prices()[action.i];
            let d = demand.eval(p);
            let censored = e.quantities()[action.j].min(d);
            let rebuilt = e.row_losses(action, censored, c).unwrap();
            for (j, l) in rebuilt.iter().enumerate() {
                let truth = loss(welfare(p, e.quantities()[j], c, d));
                prop_assert_eq!(*l, truth);
            }
        }

        #[test]
        fn estimator_is_unbiased(k in 2usize..=10, seed in any::<u64>()) {
            let mut rng = SeedStreams::new(seed).stream(Stream::Learner);
            let cols = k + 1;
            let raw: Vec<f64> = (0..k * cols).map(|_| rng.random::<f64>() + 1e-3).collect();
            let z: f64 = raw.iter().sum();
            let mu: Vec<f64> = raw.iter().map(|x| x / z).collect();
            let losses: Vec<f64> = (0..k * cols).map(|_| rng.random()).collect();
            let mut expectation = vec![0.0; k * cols];
            for it in 0..k {
                let row_mu = &mu[it * cols..(it + 1) * cols];
                let row_losses = &losses[it * cols..(it + 1) * cols];
                for jt in 0..cols {
                    let est = row_estimates(row_mu, jt, row_losses);
                    for (j, e) in est.iter().enumerate() {
                        expectation[it * cols + j] += mu[it * cols + jt] * e;
                    }
                }
            }
            for (e, l) in expectation.iter().zip(&losses) {
                prop_assert!((e - l).abs() <= 1e-12);
            }
        }
    }
}
