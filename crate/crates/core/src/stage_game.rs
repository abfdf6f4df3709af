//! One-shot supplier–retailer game with complete information.
//!
//! The supplier posts a wholesale price `w`, the retailer answers with an
//! order `q`. Under the retailer's best response the supplier maximizes
//! `g(w)(w − E[C])` over `(E[C], E[P])`; its stationary points are the roots
//! of `g′(w)(w − E[C]) + g(w)`, and the equilibrium is unique exactly when
//! one of them strictly dominates the others.

use serde::{Deserialize, Serialize};

use crate::distributions::JointDistribution;
use crate::error::{Error, Result};

/// Residual allowed on the supplier's first-order condition.
pub const TOL_STATIONARY: f64 = 1e-9;
/// Utility gap below which two stationary points count as tied.
pub const TOL_UNIQUE: f64 = 1e-7;
/// Points in the sign-change scan over `(E[C], E[P])`.
pub const SCAN_POINTS: usize = 10_000;
/// Distance kept from the open ends of the scan interval.
pub const SCAN_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergEquilibrium {
    pub w_star: f64,
    pub q_star: f64,
    pub supplier_utility: f64,
    pub retailer_utility: f64,
    /// Every located root of the supplier's first-order condition, ascending.
    pub stationary_points: Vec<f64>,
    pub unique: bool,
    /// Best minus second-best supplier utility over the stationary points;
    /// `None` when only one stationary point exists.
    pub uniqueness_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOfAnarchy {
    /// Order maximizing integrated welfare `E[min{q, D}P] − E[C]q`.
    pub optimal_quantity: f64,
    pub optimal_welfare: f64,
    pub equilibrium_welfare: f64,
    /// `optimal_welfare / equilibrium_welfare`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub concave: bool,
    pub max_second_derivative: f64,
    /// Where the maximum was observed.
    pub argmax: f64,
    pub grid_points: usize,
}

/// `u_S(w, q) = q w − q E[C]`.
pub fn supplier_utility(dist: &JointDistribution, w: f64, q: f64) -> f64 {
    q * (w - dist.mean_cost())
}

/// `u_R(w, q) = E[min{q, D} P] − q w`.
pub fn retailer_utility(dist: &JointDistribution, w: f64, q: f64) -> f64 {
    dist.expected_sales(q) - q * w
}

/// The retailer's unique best response: `g(w)` below `E[P]`, zero above.
pub fn best_response(dist: &JointDistribution, w: f64) -> f64 {
    if w >= dist.mean_price() {
        0.0
    } else if w <= 0.0 {
        dist.support_upper()
    } else {
        dist.g(w).expect("w lies in (0, E[P])")
    }
}

/// Supplier utility when the retailer best-responds.
pub fn supplier_value(dist: &JointDistribution, w: f64) -> f64 {
    supplier_utility(dist, w, best_response(dist, w))
}

/// `g′(w)(w − E[C]) + g(w)`, the derivative of the supplier's value.
pub fn stationarity_residual(dist: &JointDistribution, w: f64) -> Result<f64> {
    Ok(dist.g_prime(w)? * (w - dist.mean_cost()) + dist.g(w)?)
}

fn refine_root(dist: &JointDistribution, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    let mut best = (lo, f_lo.abs());
    for _ in 0..crate::distributions::MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = stationarity_residual(dist, mid)?;
        if f_mid.abs() < best.1 {
            best = (mid, f_mid.abs());
        }
        if f_mid.abs() <= TOL_STATIONARY {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

/// Locates every stationary point of the supplier's value on a dense scan,
/// refines each by bisection and returns the maximizer.
pub fn solve_equilibrium(dist: &JointDistribution) -> Result<StackelbergEquilibrium> {
    let (ec, ep) = (dist.mean_cost(), dist.mean_price());
    let lo = ec + SCAN_MARGIN;
    let hi = ep - SCAN_MARGIN;
    if lo >= hi {
        return Err(Error::Analysis(format!("empty price interval ({ec}, {ep})")));
    }
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let residuals = grid.iter().map(|&w| stationarity_residual(dist, w)).collect::<Result<Vec<_>>>()?;

    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if residuals[i] == 0.0 {
            roots.push(grid[i]);
        } else if i + 1 < grid.len() && residuals[i] * residuals[i + 1] < 0.0 {
            roots.push(refine_root(dist, grid[i], grid[i + 1], residuals[i])?);
        }
    }
    if roots.is_empty() {
        return Err(Error::Analysis("no interior maximizer located".into()));
    }

    let values: Vec<f64> = roots.iter().map(|&w| supplier_value(dist, w)).collect();
    let pick = select_maximizer(&values);

    let w_star = roots[pick.index];
    let q_star = best_response(dist, w_star);
    Ok(StackelbergEquilibrium {
        w_star,
        q_star,
        supplier_utility: supplier_utility(dist, w_star, q_star),
        retailer_utility: retailer_utility(dist, w_star, q_star),
        stationary_points: roots,
        unique: pick.unique,
        uniqueness_margin: pick.margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Selection {
    index: usize,
    unique: bool,
    margin: Option<f64>,
}

/// Argmax over candidate values listed in ascending order of `w`. Values
/// within [`TOL_UNIQUE`] of the best count as tied; ties go to the smallest
/// `w` and clear the uniqueness flag.
fn select_maximizer(values: &[f64]) -> Selection {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= best - TOL_UNIQUE).collect();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Selection { index: tied[0], unique: tied.len() == 1, margin: (sorted.len() > 1).then(|| sorted[0] - sorted[1]) }
}

/// Checks numerically that `L(w) = g(w)(w − c)` is concave on `(c, p)` for
/// Weibull demand with shape `k ≥ 1`, which makes the equilibrium unique.
pub fn verify_weibull_uniqueness(c: f64, p: f64, lambda: f64, k: f64) -> Result<ConcavityReport> {
    if k < 1.0 {
        return Err(Error::Precondition(format!("shape must satisfy k >= 1, got {k}")));
    }
    if !(c > 0.0 && c < p) {
        return Err(Error::Precondition(format!("need 0 < c < p, got c = {c}, p = {p}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("scale must be positive, got {lambda}")));
    }
    let dist = JointDistribution::weibull(c, p, lambda, k)?;
    let objective = |w: f64| -> Result<f64> { Ok(dist.g(w)? * (w - c)) };

    const GRID: usize = 2_000;
    let width = p - c;
    let step = 1e-4 * width;
    let mut report =
        ConcavityReport { concave: true, max_second_derivative: f64::NEG_INFINITY, argmax: c, grid_points: GRID };
    for i in 0..GRID {
        let w = c + width * (i as f64 + 0.5) / GRID as f64;
        let second = (objective(w + step)? - 2.0 * objective(w)? + objective(w - step)?) / (step * step);
        if second > report.max_second_derivative {
            report.max_second_derivative = second;
            report.argmax = w;
        }
    }
    report.concave = report.max_second_derivative <= TOL_STATIONARY;
    Ok(report)
}

/// Integrated (first-best) welfare against equilibrium welfare.
pub fn price_of_anarchy(dist: &JointDistribution, se: &StackelbergEquilibrium) -> Result<PriceOfAnarchy> {
    let ec = dist.mean_cost();
    // the integrated welfare has derivative h(q) − E[C], decreasing in q
    let optimal_quantity = if ec > 0.0 { dist.g(ec)? } else { dist.support_upper() };
    let cost = if ec > 0.0 { ec * optimal_quantity } else { 0.0 };
    let optimal_welfare = dist.expected_sales(optimal_quantity) - cost;
    let equilibrium_welfare = se.supplier_utility + se.retailer_utility;
    if !(equilibrium_welfare > 0.0) {
        return Err(Error::Analysis(format!("equilibrium welfare {equilibrium_welfare} is not positive")));
    }
    Ok(PriceOfAnarchy {
        optimal_quantity,
        optimal_welfare,
        equilibrium_welfare,
        ratio: optimal_welfare / equilibrium_welfare,
    })
}
