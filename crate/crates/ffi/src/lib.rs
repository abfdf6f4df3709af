//! C ABI for `chainlearn`.
//!
//! Every function returns a [`ChainlearnStatus`] and writes results through out
//! pointers. Objects live behind opaque handles that the caller releases with the
//! matching `*_free` function. On failure, [`chainlearn_last_error`] returns the
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use chainlearn::learners::{RetailerSpec, SupplierSpec};
use chainlearn::repeated_game::{
    bound_value, l1_last_iterate, retailer_regret, simulate, supplier_regret, BoundKind, BoundParams,
};
use chainlearn::stage_game::{best_response, price_of_anarchy, solve_equilibrium};
use chainlearn::vertical_integration::{Action, Exp3Vi};
use chainlearn::{Error, JointDistribution, SeedStreams, Stream};
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlearnStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid distribution, policy or configuration.
    InvalidArgument = 2,
    Domain = 3,
    Precondition = 4,
    Protocol = 5,
    Analysis = 6,
    Io = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlearnBound {
    Etc = 0,
    EtcLastIterate = 1,
    PiyavskiiSimple = 2,
    Piyavskii = 3,
    EtcFtl = 4,
    Exp3Vi = 5,
    Exp3ViSimplified = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlearnSupplier {
    Etc = 0,
    /// Uses the default Lipschitz constant of the distribution.
    Piyavskii = 1,
    EtcNoCost = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlearnRetailer {
    BestResponse = 0,
    Ftl = 1,
}

/// Opaque joint law of cost, price and demand.
pub struct ChainlearnDistribution {
    inner: Arc<JointDistribution>,
}

/// Opaque Exp3-VI learner with its own random stream.
pub struct ChainlearnExp3Vi {
    learner: Exp3Vi,
    rng: ChaCha8Rng,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainlearnEquilibrium {
    pub w_star: f64,
    pub q_star: f64,
    pub supplier_utility: f64,
    pub retailer_utility: f64,
    pub price_of_anarchy: f64,
    pub unique: bool,
}

/// Bound inputs; set unused optional fields to NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ChainlearnBoundParams {
    pub expected_cost: f64,
    pub expected_price: f64,
    pub density_floor: f64,
    pub lipschitz: f64,
    pub gamma: f64,
    pub eta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainlearnRegret {
    pub supplier_regret: f64,
    pub retailer_regret: f64,
    pub l1_last_iterate: f64,
}

/// Zero-based grid indices and the price and quantity they stand for.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainlearnAction {
    pub i: usize,
    pub j: usize,
    pub price: f64,
    pub quantity: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> ChainlearnStatus {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Json(_) => ChainlearnStatus::InvalidArgument,
        Error::Domain(_) => ChainlearnStatus::Domain,
        Error::Precondition(_) => ChainlearnStatus::Precondition,
        Error::Protocol(_) => ChainlearnStatus::Protocol,
        Error::Analysis(_) => ChainlearnStatus::Analysis,
        Error::Io { .. } => ChainlearnStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording any error or panic for [`chainlearn_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChainlearnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ChainlearnStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            ChainlearnStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            ChainlearnStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

unsafe fn get_mut<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(name))
}

fn optional(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

/// Copies the calling thread's last error message into `buffer` (NUL-terminated,
/// truncated to `capacity`) and returns the full message length in bytes.
/// Pass a null buffer to query the length.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buffer.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buffer.cast::<u8>(), n);
            *buffer.add(n) = 0;
        }
        msg.len()
    })
}

fn new_distribution(
    out: *mut *mut ChainlearnDistribution,
    make: impl FnOnce() -> chainlearn::Result<JointDistribution>,
) -> ChainlearnStatus {
    guard(|| {
        let out = unsafe { get_mut(out, "out") }?;
        let inner = Arc::new(make()?);
        *out = Box::into_raw(Box::new(ChainlearnDistribution { inner }));
        Ok(())
    })
}

/// Deterministic cost `c`, price `p`, demand uniform on `[0, 1]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_distribution_uniform(
    c: f64,
    p: f64,
    out: *mut *mut ChainlearnDistribution,
) -> ChainlearnStatus {
    new_distribution(out, || JointDistribution::uniform(c, p))
}

/// Deterministic cost and price, Weibull demand with scale `lambda` and shape `k`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_distribution_weibull(
    c: f64,
    p: f64,
    lambda: f64,
    k: f64,
    out: *mut *mut ChainlearnDistribution,
) -> ChainlearnStatus {
    new_distribution(out, || JointDistribution::weibull(c, p, lambda, k))
}

/// Deterministic cost and price, exponential demand truncated to `[0, 1]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_distribution_trunc_exp(
    c: f64,
    p: f64,
    rate: f64,
    out: *mut *mut ChainlearnDistribution,
) -> ChainlearnStatus {
    new_distribution(out, || JointDistribution::trunc_exp(c, p, rate))
}

/// # Safety
/// `dist` must be null or a handle from a `chainlearn_distribution_*` constructor
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_distribution_free(dist: *mut ChainlearnDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// # Safety
/// `dist` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_solve_equilibrium(
    dist: *const ChainlearnDistribution,
    out: *mut ChainlearnEquilibrium,
) -> ChainlearnStatus {
    guard(|| {
        let dist = &get(dist, "dist")?.inner;
        let out = get_mut(out, "out")?;
        let se = solve_equilibrium(dist)?;
        let poa = price_of_anarchy(dist, &se)?;
        *out = ChainlearnEquilibrium {
            w_star: se.w_star,
            q_star: se.q_star,
            supplier_utility: se.supplier_utility,
            retailer_utility: se.retailer_utility,
            price_of_anarchy: poa.ratio,
            unique: se.unique,
        };
        Ok(())
    })
}

/// The retailer's optimal order at wholesale price `w`.
///
/// # Safety
/// `dist` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_best_response(
    dist: *const ChainlearnDistribution,
    w: f64,
    out: *mut f64,
) -> ChainlearnStatus {
    guard(|| {
        let dist = &get(dist, "dist")?.inner;
        let out = get_mut(out, "out")?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("wholesale price {w} outside [0, 1]")).into());
        }
        *out = best_response(dist, w);
        Ok(())
    })
}

/// Bound value at horizon (or round) `t`.
///
/// # Safety
/// `params` must be valid for reads and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_bound_value(
    kind: ChainlearnBound,
    params: *const ChainlearnBoundParams,
    t: usize,
    out: *mut f64,
) -> ChainlearnStatus {
    guard(|| {
        let p = get(params, "params")?;
        let out = get_mut(out, "out")?;
        let kind = match kind {
            ChainlearnBound::Etc => BoundKind::Etc,
            ChainlearnBound::EtcLastIterate => BoundKind::EtcLastIterate,
            ChainlearnBound::PiyavskiiSimple => BoundKind::PiyavskiiSimple,
            ChainlearnBound::Piyavskii => BoundKind::Piyavskii,
            ChainlearnBound::EtcFtl => BoundKind::EtcFtl,
            ChainlearnBound::Exp3Vi => BoundKind::Exp3Vi,
            ChainlearnBound::Exp3ViSimplified => BoundKind::Exp3ViSimplified,
        };
        let params = BoundParams {
            expected_cost: p.expected_cost,
            expected_price: p.expected_price,
            density_floor: optional(p.density_floor),
            lipschitz: optional(p.lipschitz),
            gamma: optional(p.gamma),
            eta: optional(p.eta),
        };
        *out = bound_value(kind, &params, t)?;
        Ok(())
    })
}

/// Plays one repeated game of `horizon` rounds and reports average regrets and
/// the last-iterate distance to the equilibrium.
///
/// # Safety
/// `dist` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_run_episode(
    dist: *const ChainlearnDistribution,
    supplier: ChainlearnSupplier,
    retailer: ChainlearnRetailer,
    horizon: usize,
    seed: u64,
    out: *mut ChainlearnRegret,
) -> ChainlearnStatus {
    guard(|| {
        let dist = &get(dist, "dist")?.inner;
        let out = get_mut(out, "out")?;
        let supplier = match supplier {
            ChainlearnSupplier::Etc => SupplierSpec::Etc {},
            ChainlearnSupplier::Piyavskii => SupplierSpec::Piyavskii { lipschitz: None },
            ChainlearnSupplier::EtcNoCost => SupplierSpec::EtcNoCost {},
        };
        let retailer = match retailer {
            ChainlearnRetailer::BestResponse => RetailerSpec::BestResponse {},
            ChainlearnRetailer::Ftl => RetailerSpec::Ftl {},
        };
        let se = solve_equilibrium(dist)?;
        let traj = simulate(dist, &supplier, &retailer, horizon, SeedStreams::new(seed))?;
        *out = ChainlearnRegret {
            supplier_regret: supplier_regret(&traj, &se),
            retailer_regret: retailer_regret(&traj, &se, dist),
            l1_last_iterate: l1_last_iterate(&traj, &se),
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_exp3vi_new(
    gamma: f64,
    eta: f64,
    seed: u64,
    out: *mut *mut ChainlearnExp3Vi,
) -> ChainlearnStatus {
    guard(|| {
        let out = get_mut(out, "out")?;
        let learner = Exp3Vi::new(gamma, eta)?;
        let rng = SeedStreams::new(seed).stream(Stream::Learner);
        *out = Box::into_raw(Box::new(ChainlearnExp3Vi { learner, rng }));
        Ok(())
    })
}

/// Number of prices `K` on the grid.
///
/// # Safety
/// `learner` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_exp3vi_grid_size(
    learner: *const ChainlearnExp3Vi,
    out: *mut usize,
) -> ChainlearnStatus {
    guard(|| {
        *get_mut(out, "out")? = get(learner, "learner")?.learner.grid_size();
        Ok(())
    })
}

/// Draws the next price–quantity pair.
///
/// # Safety
/// `learner` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_exp3vi_sample(
    learner: *mut ChainlearnExp3Vi,
    out: *mut ChainlearnAction,
) -> ChainlearnStatus {
    guard(|| {
        let h = get_mut(learner, "learner")?;
        let out = get_mut(out, "out")?;
        let a = h.learner.sample(&mut h.rng);
        *out =
            ChainlearnAction { i: a.i, j: a.j, price: h.learner.prices()[a.i], quantity: h.learner.quantities()[a.j] };
        Ok(())
    })
}

/// Feeds back the censored sales `feedback = min(q, d)` and the round's cost.
///
/// # Safety
/// `learner` must be a live handle and `action` valid for reads.
#[no_mangle]
pub unsafe extern "C" fn chainlearn_exp3vi_update(
    learner: *mut ChainlearnExp3Vi,
    action: *const ChainlearnAction,
    feedback: f64,
    cost: f64,
) -> ChainlearnStatus {
    guard(|| {
        let h = get_mut(learner, "learner")?;
        let a = get(action, "action")?;
        if a.i >= h.learner.grid_size() || a.j > h.learner.grid_size() {
            return Err(Error::Protocol(format!("action ({}, {}) outside the grid", a.i, a.j)).into());
        }
        h.learner.update(Action { i: a.i, j: a.j }, feedback, cost)?;
        Ok(())
    })
}

/// # Safety
/// `learner` must be null or a live handle from [`chainlearn_exp3vi_new`].
#[no_mangle]
pub unsafe extern "C" fn chainlearn_exp3vi_free(learner: *mut ChainlearnExp3Vi) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}
