//! Joint law of production cost `C`, retail price `P` and demand `D`.
//!
//! The parametric families all have a deterministic `(C, P) = (c, p)` and a
//! continuous demand law, which gives closed forms for
//!
//! * `h(x) = E[P · F̄(x | C, P)]`, the marginal revenue of the x-th unit,
//! * `g = h⁻¹`, the retailer's best-response quantity below `E[P]`,
//! * `E[min{q, D} · P]`, the expected sales revenue of an order `q`.
//!
//! [`CustomLaw`] accepts arbitrary callbacks and falls back to a fixed
//! Monte-Carlo sample for expectations and to bisection for `g`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::rng::{SeedStreams, Stream};

/// Absolute tolerance on `x` when `g` is computed by bisection.
pub const TOL_G: f64 = 1e-10;
/// Iteration cap for every bisection in the crate.
pub const MAX_BISECTION_STEPS: usize = 200;
/// Step of the central finite differences used when no density is available.
pub const FD_STEP: f64 = 1e-6;

/// Draws `(c, p, d)`.
pub type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> (f64, f64, f64) + Send + Sync>;
/// A conditional function of the demand level given cost and price: `(x, c, p) -> value`.
pub type Conditional = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Parametric families with deterministic cost and price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemandFamily {
    /// `D ~ Uniform[0, 1]`.
    Uniform { c: f64, p: f64 },
    /// `D ~ Weibull(scale = lambda, shape = k)` on `[0, ∞)`, survival `exp(-(x/λ)^k)`.
    Weibull { c: f64, p: f64, lambda: f64, k: f64 },
    /// `D ~ Exponential(rate)` truncated to `[0, 1]`.
    TruncExp { c: f64, p: f64, rate: f64 },
}

impl DemandFamily {
    fn cost(&self) -> f64 {
        match *self {
            Self::Uniform { c, .. } | Self::Weibull { c, .. } | Self::TruncExp { c, .. } => c,
        }
    }

    fn price(&self) -> f64 {
        match *self {
            Self::Uniform { p, .. } | Self::Weibull { p, .. } | Self::TruncExp { p, .. } => p,
        }
    }

    fn validate(&self) -> Result<()> {
        let (c, p) = (self.cost(), self.price());
        if !(c.is_finite() && p.is_finite()) {
            return Err(Error::config("cost and price must be finite"));
        }
        if c < 0.0 {
            return Err(Error::config(format!("cost must be non-negative, got c = {c}")));
        }
        if c >= p {
            return Err(Error::config(format!(
                "expected cost must be below expected price, got E[C] = {c} >= E[P] = {p}"
            )));
        }
        match *self {
            Self::Uniform { .. } => {
                if p > 1.0 {
                    return Err(Error::config(format!("uniform family needs p <= 1, got {p}")));
                }
            }
            Self::Weibull { lambda, k, .. } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::config(format!("weibull scale must be positive, got {lambda}")));
                }
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::config(format!("weibull shape must be positive, got {k}")));
                }
            }
            Self::TruncExp { rate, .. } => {
                if p > 1.0 {
                    return Err(Error::config(format!("trunc-exp family needs p <= 1, got {p}")));
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::config(format!("trunc-exp rate must be positive, got {rate}")));
                }
            }
        }
        Ok(())
    }

    fn support_upper(&self) -> f64 {
        match self {
            Self::Weibull { .. } => f64::INFINITY,
            _ => 1.0,
        }
    }

    fn density_floor(&self) -> Option<f64> {
        match *self {
            Self::Uniform { .. } => Some(1.0),
            Self::Weibull { .. } => None,
            // the density is decreasing, so its minimum sits at d = 1
            Self::TruncExp { rate, .. } => Some(rate * (-rate).exp() / -(-rate).exp_m1()),
        }
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Uniform { .. } => (1.0 - x).max(0.0),
            Self::Weibull { lambda, k, .. } => (-(x / lambda).powf(k)).exp(),
            Self::TruncExp { rate, .. } => {
                if x >= 1.0 {
                    0.0
                } else {
                    ((-rate * x).exp() - (-rate).exp()) / -(-rate).exp_m1()
                }
            }
        }
    }

    fn density(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.support_upper() {
            return 0.0;
        }
        match *self {
            Self::Uniform { .. } => 1.0,
            Self::Weibull { lambda, k, .. } => {
                let z = x / lambda;
                k / lambda * z.powf(k - 1.0) * (-z.powf(k)).exp()
            }
            Self::TruncExp { rate, .. } => rate * (-rate * x).exp() / -(-rate).exp_m1(),
        }
    }

    /// `∫₀^q F̄(x) dx = E[min{q, D}]`.
    fn expected_min(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Uniform { .. } => {
                let q = q.min(1.0);
                q - 0.5 * q * q
            }
            Self::Weibull { lambda, k, .. } => {
                let mean = lambda * gamma(1.0 + 1.0 / k);
                if q.is_infinite() {
                    mean
                } else {
                    mean * gamma_lr(1.0 / k, (q / lambda).powf(k))
                }
            }
            Self::TruncExp { rate, .. } => {
                let q = q.min(1.0);
                (-(-rate * q).exp_m1() / rate - q * (-rate).exp()) / -(-rate).exp_m1()
            }
        }
    }

    fn sample_demand(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        match *self {
            Self::Uniform { .. } => u,
            Self::Weibull { lambda, k, .. } => lambda * (-(-u).ln_1p()).powf(1.0 / k),
            Self::TruncExp { rate, .. } => -(u * (-rate).exp_m1()).ln_1p() / rate,
        }
    }

    /// Closed-form inverse of `x ↦ p F̄(x)` on `(0, p)`.
    fn inverse_marginal_revenue(&self, w: f64) -> f64 {
        let p = self.price();
        match *self {
            Self::Uniform { .. } => (p - w) / p,
            Self::Weibull { lambda, k, .. } => lambda * (p / w).ln().powf(1.0 / k),
            Self::TruncExp { rate, .. } => {
                let e = (-rate).exp();
                -((w / p) * (1.0 - e) + e).ln() / rate
            }
        }
    }

    fn inverse_marginal_revenue_derivative(&self, w: f64) -> f64 {
        let p = self.price();
        match *self {
            Self::Uniform { .. } => -1.0 / p,
            Self::Weibull { lambda, k, .. } => -lambda / (k * w) * (p / w).ln().powf(1.0 / k - 1.0),
            Self::TruncExp { .. } => -1.0 / (p * self.density(self.inverse_marginal_revenue(w))),
        }
    }
}

impl fmt::Display for DemandFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform { c, p } => write!(f, "uniform(c={c}, p={p})"),
            Self::Weibull { c, p, lambda, k } => {
                write!(f, "weibull(c={c}, p={p}, lambda={lambda}, k={k})")
            }
            Self::TruncExp { c, p, rate } => write!(f, "trunc-exp(c={c}, p={p}, rate={rate})"),
        }
    }
}

/// A user-supplied law of `(C, P, D)`.
///
/// Expectations are taken over a fixed sample of `sample_count` draws made
/// once at construction, so `h` stays deterministic and monotone.
#[derive(Clone)]
pub struct CustomLaw {
    sampler: Option<Sampler>,
    survival: Option<Conditional>,
    density: Option<Conditional>,
    density_floor: Option<f64>,
    support_upper: f64,
    sample_count: usize,
    seed: u64,
}

impl CustomLaw {
    pub fn new() -> Self {
        Self {
            sampler: None,
            survival: None,
            density: None,
            density_floor: None,
            support_upper: 1.0,
            sample_count: 1 << 14,
            seed: 0,
        }
    }

    pub fn sampler(mut self, sampler: impl Fn(&mut dyn RngCore) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(sampler));
        self
    }

    /// Conditional survival `F̄(x | c, p)`.
    pub fn survival(mut self, survival: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.survival = Some(Arc::new(survival));
        self
    }

    /// Conditional density `f(x | c, p)`; without it `g′` uses finite differences.
    pub fn density(mut self, density: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    pub fn density_floor(mut self, floor: f64) -> Self {
        self.density_floor = Some(floor);
        self
    }

    pub fn support_upper(mut self, upper: f64) -> Self {
        self.support_upper = upper;
        self
    }

    pub fn sample_count(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for CustomLaw {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone)]
struct CustomState {
    sampler: Sampler,
    survival: Conditional,
    density: Option<Conditional>,
    density_floor: Option<f64>,
    support_upper: f64,
    draws: Vec<(f64, f64, f64)>,
    cost: Estimate,
    price: Estimate,
}

#[derive(Clone)]
enum Law {
    Parametric(DemandFamily),
    Custom(Box<CustomState>),
}

/// A moment of the joint law.
///
/// Closed-form moments carry `std_error = 0` and `samples = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, samples: 0 }
    }

    fn from_samples(xs: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        for x in xs {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self { value: mean, std_error: (var / n.max(1) as f64).sqrt(), samples: n }
    }
}

/// The law `𝒟` of `(C, P, D)`. Immutable once built.
#[derive(Clone)]
pub struct JointDistribution {
    law: Law,
}

impl fmt::Debug for JointDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Parametric(fam) => write!(f, "JointDistribution({fam})"),
            Law::Custom(state) => write!(f, "JointDistribution(custom, {} draws)", state.draws.len()),
        }
    }
}

impl JointDistribution {
    pub fn from_family(family: DemandFamily) -> Result<Self> {
        family.validate()?;
        Ok(Self { law: Law::Parametric(family) })
    }

    pub fn uniform(c: f64, p: f64) -> Result<Self> {
        Self::from_family(DemandFamily::Uniform { c, p })
    }

    pub fn weibull(c: f64, p: f64, lambda: f64, k: f64) -> Result<Self> {
        Self::from_family(DemandFamily::Weibull { c, p, lambda, k })
    }

    pub fn trunc_exp(c: f64, p: f64, rate: f64) -> Result<Self> {
        Self::from_family(DemandFamily::TruncExp { c, p, rate })
    }

    pub fn custom(law: CustomLaw) -> Result<Self> {
        let sampler = law.sampler.ok_or_else(|| Error::config("custom family requires a sampler"))?;
        let survival =
            law.survival.ok_or_else(|| Error::config("custom family requires a conditional survival function"))?;
        if law.sample_count == 0 {
            return Err(Error::config("custom family needs a positive sample count"));
        }
        if let Some(floor) = law.density_floor {
            if !(floor > 0.0) {
                return Err(Error::config(format!("density floor must be positive, got {floor}")));
            }
        }
        if !(law.support_upper > 0.0) {
            return Err(Error::config("support upper bound must be positive"));
        }
        let mut rng = SeedStreams::new(law.seed).stream(Stream::Nature);
        let draws: Vec<_> = (0..law.sample_count).map(|_| sampler(&mut rng)).collect();
        let cost = Estimate::from_samples(draws.iter().map(|d| d.0));
        let price = Estimate::from_samples(draws.iter().map(|d| d.1));
        if cost.value >= price.value {
            return Err(Error::config(format!(
                "expected cost must be below expected price, got E[C] ≈ {} >= E[P] ≈ {}",
                cost.value, price.value
            )));
        }
        Ok(Self {
            law: Law::Custom(Box::new(CustomState {
                sampler,
                survival,
                density: law.density,
                density_floor: law.density_floor,
                support_upper: law.support_upper,
                draws,
                cost,
                price,
            })),
        })
    }

    pub fn family(&self) -> Option<DemandFamily> {
        match &self.law {
            Law::Parametric(f) => Some(*f),
            Law::Custom(_) => None,
        }
    }

    /// True when closed forms exist for `g`, `g′` and the expected sales.
    pub fn has_closed_form(&self) -> bool {
        matches!(self.law, Law::Parametric(_))
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64, f64) {
        match &self.law {
            Law::Parametric(f) => (f.cost(), f.price(), f.sample_demand(rng)),
            Law::Custom(s) => (s.sampler)(rng),
        }
    }

    pub fn expected_cost(&self) -> Estimate {
        match &self.law {
            Law::Parametric(f) => Estimate::exact(f.cost()),
            Law::Custom(s) => s.cost,
        }
    }

    pub fn expected_price(&self) -> Estimate {
        match &self.law {
            Law::Parametric(f) => Estimate::exact(f.price()),
            Law::Custom(s) => s.price,
        }
    }

    pub(crate) fn mean_cost(&self) -> f64 {
        self.expected_cost().value
    }

    pub(crate) fn mean_price(&self) -> f64 {
        self.expected_price().value
    }

    /// Lower bound `L` on the conditional demand density over the support,
    /// when one exists.
    pub fn density_floor(&self) -> Option<f64> {
        match &self.law {
            Law::Parametric(f) => f.density_floor(),
            Law::Custom(s) => s.density_floor,
        }
    }

    pub fn support_upper(&self) -> f64 {
        match &self.law {
            Law::Parametric(f) => f.support_upper(),
            Law::Custom(s) => s.support_upper,
        }
    }

    /// True when every draw of `(C, P, D)` lies in `[0, 1]³`.
    pub fn is_bounded(&self) -> bool {
        match &self.law {
            Law::Parametric(f) => f.support_upper() <= 1.0 && f.price() <= 1.0,
            Law::Custom(s) => s.support_upper <= 1.0,
        }
    }

    /// Rejects laws the learning protocol cannot run on.
    pub fn require_bounded(&self) -> Result<()> {
        if self.is_bounded() {
            Ok(())
        } else {
            Err(Error::config(
                "the repeated game needs (C, P, D) supported on [0, 1]^3; this law has unbounded support",
            ))
        }
    }

    /// Conditional demand density `f(x | c, p)`. Parametric families ignore
    /// `(c, p)` since their cost and price are deterministic.
    pub fn conditional_density(&self, x: f64, c: f64, p: f64) -> Option<f64> {
        match &self.law {
            Law::Parametric(f) => Some(f.density(x)),
            Law::Custom(s) => s.density.as_ref().map(|d| d(x, c, p)),
        }
    }

    /// Checks `f(d | p) ≥ L` on `points` evenly spaced demand levels across `[0, 1]`.
    pub fn check_density_floor(&self, points: usize) -> Result<bool> {
        let floor = self.density_floor().ok_or_else(|| Error::config("law declares no density floor"))?;
        let grid = (0..points).map(|i| i as f64 / (points.max(2) - 1) as f64);
        match &self.law {
            Law::Parametric(f) => Ok(grid.map(|d| f.density(d)).all(|v| v >= floor * (1.0 - 1e-12))),
            Law::Custom(s) => {
                let density = s.density.as_ref().ok_or_else(|| Error::config("custom law declares no density"))?;
                let grid: Vec<f64> = grid.collect();
                Ok(s.draws.iter().take(256).all(|&(c, p, _)| grid.iter().all(|&d| density(d, c, p) >= floor)))
            }
        }
    }

    /// `h(x) = E[P · F̄(x | C, P)]`.
    pub fn h(&self, x: f64) -> f64 {
        match &self.law {
            Law::Parametric(f) => f.price() * f.survival(x),
            Law::Custom(s) => {
                s.draws.iter().map(|&(c, p, _)| p * (s.survival)(x, c, p)).sum::<f64>() / s.draws.len() as f64
            }
        }
    }

    /// `h′(x) = −E[P · f(x | C, P)]`.
    pub fn h_prime(&self, x: f64) -> f64 {
        match &self.law {
            Law::Parametric(f) => -f.price() * f.density(x),
            Law::Custom(s) => match &s.density {
                Some(density) => {
                    -s.draws.iter().map(|&(c, p, _)| p * density(x, c, p)).sum::<f64>() / s.draws.len() as f64
                }
                None => {
                    let lo = (x - FD_STEP).max(0.0);
                    let hi = x + FD_STEP;
                    (self.h(hi) - self.h(lo)) / (hi - lo)
                }
            },
        }
    }

    fn check_g_domain(&self, w: f64) -> Result<()> {
        let ep = self.mean_price();
        if w > 0.0 && w < ep {
            Ok(())
        } else {
            Err(Error::Domain(format!("g(w) needs 0 < w < E[P] = {ep}, got w = {w}")))
        }
    }

    /// `g(w) = h⁻¹(w)`, the unique quantity whose marginal revenue equals `w`.
    pub fn g(&self, w: f64) -> Result<f64> {
        self.check_g_domain(w)?;
        match &self.law {
            Law::Parametric(f) => Ok(f.inverse_marginal_revenue(w)),
            Law::Custom(_) => Ok(self.g_by_bisection(w)),
        }
    }

    /// `g` computed by bisection on `h`, regardless of closed forms.
    pub fn g_by_bisection(&self, w: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.support_upper();
        if hi.is_infinite() {
            hi = 1.0;
            let mut steps = 0;
            while self.h(hi) > w && steps < MAX_BISECTION_STEPS {
                lo = hi;
                hi *= 2.0;
                steps += 1;
            }
        }
        for _ in 0..MAX_BISECTION_STEPS {
            if hi - lo <= TOL_G {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.h(mid) > w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `g′(w) = 1 / h′(g(w))`.
    pub fn g_prime(&self, w: f64) -> Result<f64> {
        self.check_g_domain(w)?;
        match &self.law {
            Law::Parametric(f) => Ok(f.inverse_marginal_revenue_derivative(w)),
            Law::Custom(s) => {
                if s.density.is_some() {
                    Ok(1.0 / self.h_prime(self.g(w)?))
                } else {
                    let ep = self.mean_price();
                    let lo = (w - FD_STEP).max(f64::MIN_POSITIVE);
                    let hi = (w + FD_STEP).min(ep - f64::EPSILON * ep);
                    Ok((self.g(hi)? - self.g(lo)?) / (hi - lo))
                }
            }
        }
    }

    /// `E[min{q, D} · P]`.
    pub fn expected_sales(&self, q: f64) -> f64 {
        match &self.law {
            Law::Parametric(f) => f.price() * f.expected_min(q),
            Law::Custom(s) => s.draws.iter().map(|&(_, p, d)| q.min(d) * p).sum::<f64>() / s.draws.len() as f64,
        }
    }
}
