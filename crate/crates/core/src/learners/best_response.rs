use std::sync::Arc;

use super::{RetailerPolicy, SupplierPolicy};
use crate::distributions::JointDistribution;
use crate::error::{Error, Result};
use crate::stage_game;

/// Retailer that knows the law of `(P, D)` and plays `g(w)`.
#[derive(Clone)]
pub struct ExactBestResponse {
    dist: Arc<JointDistribution>,
}

impl ExactBestResponse {
    pub fn new(dist: Arc<JointDistribution>) -> Result<Self> {
        if !dist.has_closed_form() {
            return Err(Error::config("exact best response needs a parametric family with closed-form g"));
        }
        Ok(Self { dist })
    }
}

impl RetailerPolicy for ExactBestResponse {
    fn name(&self) -> &'static str {
        "best-response"
    }

    fn act(&mut self, _t: usize, wholesale: f64) -> Result<f64> {
        Ok(stage_game::best_response(&self.dist, wholesale))
    }

    fn observe(&mut self, _t: usize, _price: f64, _demand: f64) -> Result<()> {
        Ok(())
    }
}

/// Supplier that posts the same wholesale price every round.
#[derive(Debug, Clone)]
pub struct FixedPrice {
    w: f64,
}

impl FixedPrice {
    pub fn new(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::config(format!("fixed wholesale price {w} outside [0, 1]")));
        }
        Ok(Self { w })
    }
}

impl SupplierPolicy for FixedPrice {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn act(&mut self, _t: usize) -> Result<f64> {
        Ok(self.w)
    }

    fn observe(&mut self, _t: usize, _quantity: f64, _cost: f64) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::CustomLaw;
    use rand::Rng;

    #[test]
    fn matches_stage_game() {
        let d = Arc::new(JointDistribution::uniform(0.2, 0.8).unwrap());
        let mut r = ExactBestResponse::new(d).unwrap();
        assert!((r.act(1, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(r.act(2, 0.8).unwrap(), 0.0);
        assert_eq!(r.act(3, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn custom_law_is_a_config_error() {
        let law = CustomLaw::new()
            .sampler(|rng| (0.2, 0.8, rng.random::<f64>()))
            .survival(|x, _, _| (1.0 - x).clamp(0.0, 1.0))
            .sample_count(64);
        let d = Arc::new(JointDistribution::custom(law).unwrap());
        assert!(matches!(ExactBestResponse::new(d), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_price_validates_range() {
        assert!(FixedPrice::new(1.5).is_err());
        assert_eq!(FixedPrice::new(0.5).unwrap().act(9).unwrap(), 0.5);
    }
}
