use serde::{Deserialize, Serialize};

use super::{AdversarialInstance, DemandCurve};

/// Price step of the fallback grid used when some round has linear demand.
pub const LINEAR_PRICE_STEP: f64 = 1e-4;

/// A fixed action and its cumulative welfare over the instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedAction {
    pub p: f64,
    pub q: f64,
    pub welfare: f64,
}

/// Best quantity at a fixed price given the round demands `y_t = d_t(p)`.
///
/// `q ↦ p Σ min(q, y_t) − qC` is concave piecewise linear with kinks at the
/// `y_t`, so the optimum is `0` or one of them.
fn best_quantity(p: f64, demands: &mut [f64], total_cost: f64) -> (f64, f64) {
    demands.sort_by(f64::total_cmp);
    let n = demands.len();
    let mut best = (0.0, 0.0);
    let mut below = 0.0;
    for (k, &y) in demands.iter().enumerate() {
        // rounds with y_s <= y sell y_s, the remaining n − k rounds sell y
        let value = p * (below + (n - k) as f64 * y) - y * total_cost;
        if value > best.1 {
            best = (y, value);
        }
        below += y;
    }
    best
}

/// Cumulative welfare of `(p, q)` summed over the instance.
pub fn cumulative_welfare(instance: &AdversarialInstance, p: f64, q: f64) -> f64 {
    instance.costs.iter().zip(&instance.demands).map(|(&c, d)| super::welfare(p, q, c, d.eval(p))).sum()
}

fn evaluate_price(instance: &AdversarialInstance, p: f64, total_cost: f64, scratch: &mut Vec<f64>) -> FixedAction {
    scratch.clear();
    scratch.extend(instance.demands.iter().map(|d| d.eval(p)));
    let (q, welfare) = best_quantity(p, scratch, total_cost);
    FixedAction { p, q, welfare }
}

/// `argmax` of cumulative welfare over `[0, 1]²`.
///
/// Exact for threshold and piecewise-constant rounds. With linear rounds the
/// price search adds a `1e-4` grid, so the result is within `1e-4·T` of optimal.
pub fn best_fixed_action(instance: &AdversarialInstance) -> FixedAction {
    let total_cost: f64 = instance.costs.iter().sum();
    if instance.is_posted_price() {
        return best_posted_price(instance, total_cost);
    }
    let mut prices = vec![0.0, 1.0];
    let mut linear = false;
    for d in &instance.demands {
        prices.extend(d.critical_prices());
        linear |= matches!(d, DemandCurve::Linear { b, .. } if *b > 0.0);
    }
    if linear {
        let steps = (1.0 / LINEAR_PRICE_STEP).round() as usize;
        prices.extend((0..=steps).map(|s| s as f64 * LINEAR_PRICE_STEP));
    }
    prices.sort_by(f64::total_cmp);
    prices.dedup();
    let mut scratch = Vec::with_capacity(instance.horizon());
    let mut best = FixedAction { p: 0.0, q: 0.0, welfare: 0.0 };
    for p in prices {
        let cand = evaluate_price(instance, p, total_cost, &mut scratch);
        if cand.welfare > best.welfare {
            best = cand;
        }
    }
    best
}

/// Threshold rounds: sell one unit to every round with `v_t ≥ p`, or nothing.
fn best_posted_price(instance: &AdversarialInstance, total_cost: f64) -> FixedAction {
    let mut vs: Vec<f64> = instance
        .demands
        .iter()
        .filter_map(|d| match d {
            DemandCurve::Threshold { v } if *v >= 0.0 => Some(v.min(1.0)),
            _ => None,
        })
        .collect();
    vs.sort_by(|a, b| b.total_cmp(a));
    let mut best = FixedAction { p: 0.0, q: 0.0, welfare: 0.0 };
    let mut k = 0;
    while k < vs.len() {
        let p = vs[k];
        while k < vs.len() && vs[k] == p {
            k += 1;
        }
        let welfare = p * k as f64 - total_cost;
        if welfare > best.welfare {
            best = FixedAction { p, q: 1.0, welfare };
        }
    }
    best
}

/// Best action on the `K × (K+1)` grid of prices `(i−1)γ` and quantities
/// `(j−1)γ` plus `1`.
pub fn best_grid_action(instance: &AdversarialInstance, gamma: f64) -> FixedAction {
    let k = super::action_grid_size(gamma);
    let total_cost: f64 = instance.costs.iter().sum();
    let mut quantities: Vec<f64> = (0..k).map(|j| j as f64 * gamma).collect();
    quantities.push(1.0);
    let mut best = FixedAction { p: 0.0, q: 0.0, welfare: 0.0 };
    let mut ys = Vec::with_capacity(instance.horizon());
    for i in 0..k {
        let p = i as f64 * gamma;
        ys.clear();
        ys.extend(instance.demands.iter().map(|d| d.eval(p)));
        ys.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(ys.len() + 1);
        prefix.push(0.0);
        for y in &ys {
            prefix.push(prefix.last().unwrap() + y);
        }
        for &q in &quantities {
            let below = ys.partition_point(|&y| y < q);
            let sales = prefix[below] + (ys.len() - below) as f64 * q;
            let welfare = p * sales - q * total_cost;
            if welfare > best.welfare {
                best = FixedAction { p, q, welfare };
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGap {
    pub cumulative: f64,
    pub per_round: f64,
    /// `2γT`.
    pub bound: f64,
}

/// Continuous best fixed welfare minus best grid welfare.
pub fn discretization_gap(instance: &AdversarialInstance, gamma: f64) -> DiscretizationGap {
    let t = instance.horizon() as f64;
    let cumulative = best_fixed_action(instance).welfare - best_grid_action(instance, gamma).welfare;
    DiscretizationGap { cumulative, per_round: cumulative / t, bound: 2.0 * gamma * t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStreams;
    use crate::vertical_integration::PostedPriceGenerator;
    use proptest::prelude::*;

    fn single(c: f64, d: DemandCurve) -> AdversarialInstance {
        AdversarialInstance::new(vec![c], vec![d]).unwrap()
    }

    fn brute_force(instance: &AdversarialInstance, step: f64) -> f64 {
        let n = (1.0 / step).round() as usize;
        let mut best = 0.0f64;
        for a in 0..=n {
            for b in 0..=n {
                best = best.max(cumulative_welfare(instance, a as f64 * step, b as f64 * step));
            }
        }
        best
    }

    #[test]
    fn constant_valuation() {
        let inst = AdversarialInstance::new(vec![0.0; 5], vec![DemandCurve::Threshold { v: 0.6 }; 5]).unwrap();
        let best = best_fixed_action(&inst);
        assert_eq!((best.p, best.q), (0.6, 1.0));
        assert!((best.welfare - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gap_examples() {
        let g = discretization_gap(&single(0.0, DemandCurve::Threshold { v: 0.37 }), 0.1);
        assert!((g.per_round - 0.07).abs() < 1e-12);
        assert!(g.cumulative <= g.bound);
        let g = discretization_gap(&single(0.0, DemandCurve::Threshold { v: 0.5 }), 0.1);
        assert!(g.cumulative.abs() < 1e-12);
        let lin = single(0.0, DemandCurve::Linear { a: 1.0, b: 1.0 });
        let best = best_fixed_action(&lin);
        assert!((best.p - 0.5).abs() < 1e-12 && (best.welfare - 0.25).abs() < 1e-12);
        assert!(discretization_gap(&lin, 0.25).cumulative.abs() < 1e-12);
    }

    #[test]
    fn mixed_instance_matches_brute_force() {
        let inst = AdversarialInstance::new(
            vec![0.1, 0.05, 0.2, 0.0],
            vec![
                DemandCurve::Threshold { v: 0.7 },
                DemandCurve::Linear { a: 0.9, b: 1.2 },
                DemandCurve::PiecewiseConstant { breakpoints: vec![0.3, 0.55], levels: vec![1.0, 0.6, 0.2] },
                DemandCurve::Threshold { v: 0.45 },
            ],
        )
        .unwrap();
        let best = best_fixed_action(&inst);
        assert!((cumulative_welfare(&inst, best.p, best.q) - best.welfare).abs() < 1e-12);
        let brute = brute_force(&inst, 0.005);
        assert!(best.welfare >= brute - 1e-12);
        assert!(best.welfare - brute <= 4.0 * 0.005 * 3.0);
    }

    #[test]
    fn posted_price_fast_path_agrees_with_generic_search() {
        let inst = PostedPriceGenerator::uniform(0.05).generate(300, SeedStreams::new(5)).unwrap();
        let fast = best_fixed_action(&inst);
        let mut scratch = Vec::new();
        let total_cost: f64 = inst.costs.iter().sum();
        let generic = inst
            .demands
            .iter()
            .flat_map(|d| d.critical_prices())
            .map(|p| evaluate_price(&inst, p, total_cost, &mut scratch).welfare)
            .fold(0.0, f64::max);
        assert!((fast.welfare - generic).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn gap_within_two_gamma_per_round(
            vs in prop::collection::vec(0.0f64..1.0, 1..20),
            c in 0.0f64..0.3,
            gamma in 0.05f64..0.5,
        ) {
            let n = vs.len();
            let inst = AdversarialInstance::new(
                vec![c; n],
                vs.into_iter().map(|v| DemandCurve::Threshold { v }).collect(),
            ).unwrap();
            let g = discretization_gap(&inst, gamma);
            prop_assert!(g.cumulative >= -1e-12);
            prop_assert!(g.cumulative <= g.bound + 1e-12);
        }
    }
}
