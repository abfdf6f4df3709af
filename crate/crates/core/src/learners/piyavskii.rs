use super::{check_round, SupplierPolicy};
use crate::error::{Error, Result};

/// Piyavskii–Shubert zeroth-order maximizer of `w ↦ q_w(w − E[C])`.
///
/// The proxy is the Lipschitz upper envelope `min_s f̂_s + M|w_s − w|` over the
/// evaluations so far. Its maximizer on `[0, 1]` is found exactly from the
/// envelope breakpoints.
#[derive(Debug, Clone)]
pub struct PiyavskiiShubert {
    horizon: usize,
    lipschitz: f64,
    expected_cost: f64,
    /// `(w_s, f̂_s)` sorted by `w_s`.
    evaluations: Vec<(f64, f64)>,
    next: f64,
    pending: Option<(usize, f64)>,
}

impl PiyavskiiShubert {
    pub fn new(horizon: usize, lipschitz: f64, expected_cost: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Precondition(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if horizon == 0 {
            return Err(Error::Precondition("horizon must be at least 1".into()));
        }
        Ok(Self { horizon, lipschitz, expected_cost, evaluations: Vec::new(), next: 1.0, pending: None })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn evaluations(&self) -> &[(f64, f64)] {
        &self.evaluations
    }

    /// Envelope value at `w`; `+∞` before the first evaluation.
    pub fn proxy(&self, w: f64) -> f64 {
        self.evaluations.iter().map(|&(ws, f)| f + self.lipschitz * (ws - w).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Maximizer of the envelope and its value, smallest `w` on ties.
    pub fn envelope_argmax(&self) -> Option<(f64, f64)> {
        let pts = &self.evaluations;
        let n = pts.len();
        if n == 0 {
            return None;
        }
        let m = self.lipschitz;
        // A_i: envelope at w_i from points at or left of i; B_i: from the right.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = pts[0].1;
        for i in 1..n {
            a[i] = pts[i].1.min(a[i - 1] + m * (pts[i].0 - pts[i - 1].0));
        }
        b[n - 1] = pts[n - 1].1;
        for i in (0..n - 1).rev() {
            b[i] = pts[i].1.min(b[i + 1] + m * (pts[i + 1].0 - pts[i].0));
        }

        let mut best = (0.0, b[0] + m * pts[0].0);
        let mut consider = |w: f64, v: f64| {
            if v > best.1 {
                best = (w, v);
            }
        };
        for i in 0..n - 1 {
            let (lo, hi) = (pts[i].0, pts[i + 1].0);
            let peak = (((b[i + 1] - a[i]) / m + lo + hi) / 2.0).clamp(lo, hi);
            let value = (a[i] + m * (peak - lo)).min(b[i + 1] + m * (hi - peak));
            consider(peak, value);
        }
        consider(1.0, a[n - 1] + m * (1.0 - pts[n - 1].0));
        Some(best)
    }
}

impl SupplierPolicy for PiyavskiiShubert {
    fn name(&self) -> &'static str {
        "piyavskii"
    }

    fn act(&mut self, t: usize) -> Result<f64> {
        check_round(t, self.horizon)?;
        if t != self.evaluations.len() + 1 {
            return Err(Error::Protocol(format!("round {t} requested after {} observations", self.evaluations.len())));
        }
        self.pending = Some((t, self.next));
        Ok(self.next)
    }

    fn observe(&mut self, t: usize, quantity: f64, _cost: f64) -> Result<()> {
        let w = match self.pending.take() {
            Some((round, w)) if round == t => w,
            _ => return Err(Error::Protocol(format!("observation for round {t} without a matching action"))),
        };
        let f = quantity * (w - self.expected_cost);
        let at = self.evaluations.partition_point(|&(ws, _)| ws <= w);
        self.evaluations.insert(at, (w, f));
        self.next = self.envelope_argmax().map_or(1.0, |(w, _)| w);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::JointDistribution;
    use crate::stage_game::{best_response, supplier_value};
    use proptest::prelude::*;

    fn grid_argmax(p: &PiyavskiiShubert, step: f64) -> (f64, f64) {
        let n = (1.0 / step).round() as usize;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let w = i as f64 * step;
            let v = p.proxy(w);
            if v > best.1 {
                best = (w, v);
            }
        }
        best
    }

    #[test]
    fn first_price_is_one_then_far_endpoint() {
        let mut p = PiyavskiiShubert::new(10, 1.0, 0.0).unwrap();
        assert_eq!(p.act(1).unwrap(), 1.0);
        p.observe(1, 0.0, 0.0).unwrap();
        assert!((p.proxy(0.3) - 0.7).abs() < 1e-15);
        let (w, v) = grid_argmax(&p, 1e-6);
        assert_eq!((w, v), (0.0, 1.0));
        assert_eq!(p.act(2).unwrap(), 0.0);
    }

    #[test]
    fn interior_peak_between_two_points() {
        let mut p = PiyavskiiShubert::new(10, 2.0, 0.0).unwrap();
        p.evaluations = vec![(0.0, 0.1), (1.0, 0.3)];
        let (w, v) = p.envelope_argmax().unwrap();
        // 0.1 + 2w = 0.3 + 2(1 - w)  =>  w = 0.55
        assert!((w - 0.55).abs() < 1e-12);
        assert!((v - 1.2).abs() < 1e-12);
    }

    #[test]
    fn uniform_run_respects_simple_regret_bound() {
        let d = JointDistribution::uniform(0.2, 0.8).unwrap();
        let m = super::super::default_lipschitz(&d).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        let mut p = PiyavskiiShubert::new(100, m, 0.2).unwrap();
        let f_star = supplier_value(&d, 0.5);
        for t in 1..=100 {
            let w = p.act(t).unwrap();
            let q = best_response(&d, w);
            let gap = f_star - supplier_value(&d, w);
            assert!(gap <= 9.0 * m * (m * t as f64).log2() / t as f64 + 1e-12);
            p.observe(t, q, 0.0).unwrap();
        }
        let last = p.evaluations().iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
        assert!(f_star - last < 1e-3);
    }

    #[test]
    fn envelope_dominates_uniform_objective() {
        let d = JointDistribution::uniform(0.2, 0.8).unwrap();
        let mut p = PiyavskiiShubert::new(40, 2.0, 0.2).unwrap();
        for t in 1..=40 {
            let w = p.act(t).unwrap();
            p.observe(t, best_response(&d, w), 0.0).unwrap();
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                assert!(p.proxy(x) >= supplier_value(&d, x) - 1e-12);
            }
        }
    }

    #[test]
    fn out_of_order_calls_are_protocol_errors() {
        let mut p = PiyavskiiShubert::new(3, 1.0, 0.0).unwrap();
        assert!(matches!(p.observe(1, 0.5, 0.0), Err(Error::Protocol(_))));
        assert!(matches!(p.act(2), Err(Error::Protocol(_))));
        assert!(PiyavskiiShubert::new(3, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn exact_argmax_matches_grid(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..0.5), 1..8),
            m in 0.5f64..4.0,
        ) {
            let mut p = PiyavskiiShubert::new(10, m, 0.0).unwrap();
            let mut pts = pts;
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            p.evaluations = pts.clone();
            let (w, v) = p.envelope_argmax().unwrap();
            prop_assert!((p.proxy(w) - v).abs() < 1e-9);
            let (_, gv) = grid_argmax(&p, 1e-4);
            prop_assert!(v >= gv - 1e-12);
            prop_assert!(v - gv <= m * 1e-4 + 1e-12);
            for &(ws, f) in &pts {
                prop_assert!(p.proxy(ws) <= f + 1e-12);
            }
        }
    }
}
