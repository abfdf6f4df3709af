//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use chainlearn::learners::{default_lipschitz, FollowTheLeader, RetailerPolicy, RetailerSpec, SupplierSpec};
use chainlearn::repeated_game::{
    bound_value, l1_last_iterate, retailer_regret, simple_regret_curve, simulate, supplier_regret, BoundKind,
    BoundParams,
};
use chainlearn::stage_game::{price_of_anarchy, retailer_utility, solve_equilibrium, verify_weibull_uniqueness};
use chainlearn::vertical_integration::{
    default_eta, default_gamma, exponential_weights_slack, loss, row_estimates, run_adversarial, welfare, Action,
    DemandCurve, Exp3Vi, PostedPriceGenerator,
};
use chainlearn::{JointDistribution, SeedStreams, Stream};
use rand::Rng;

const SEEDS: u64 = 50;
const EXPERIMENT: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn uniform() -> Arc<JointDistribution> {
    Arc::new(JointDistribution::uniform(0.2, 0.8).unwrap())
}

fn streams(seed: u64) -> SeedStreams {
    SeedStreams::for_repetition(EXPERIMENT, seed)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn within_time(outcome: Outcome, elapsed: Duration, limit: Option<Duration>) -> Outcome {
    match limit {
        Some(limit) => Outcome {
            pass: outcome.pass && elapsed < limit,
            detail: format!("{}; {:.2?} (limit {:?})", outcome.detail, elapsed, limit),
        },
        None => Outcome { pass: outcome.pass, detail: format!("{}; {:.2?}", outcome.detail, elapsed) },
    }
}

fn closed_form_equilibrium() -> Outcome {
    let d = uniform();
    let se = solve_equilibrium(&d).unwrap();
    let poa = price_of_anarchy(&d, &se).unwrap();
    let pass = (se.w_star - 0.5).abs() <= 1e-6
        && (se.q_star - 0.375).abs() <= 1e-6
        && se.unique
        && (poa.ratio - 4.0 / 3.0).abs() <= 1e-6
        && (poa.optimal_welfare - 0.225).abs() <= 1e-6
        && (poa.equilibrium_welfare - 0.16875).abs() <= 1e-6;
    check(
        pass,
        format!(
            "w*={:.9} q*={:.9} unique={} poa={:.9} welfare {:.6}/{:.6}",
            se.w_star, se.q_star, se.unique, poa.ratio, poa.optimal_welfare, poa.equilibrium_welfare
        ),
    )
}

fn weibull_equilibrium() -> Outcome {
    let d = JointDistribution::weibull(0.0, 1.0, 1.0, 1.0).unwrap();
    let se = solve_equilibrium(&d).unwrap();
    // independent oracle: supplier value w·ln(1/w) on a 1e-6 grid
    let mut grid = (0.0, f64::NEG_INFINITY);
    for i in 1..1_000_000 {
        let w = i as f64 * 1e-6;
        let v = w * (1.0 / w).ln();
        if v > grid.1 {
            grid = (w, v);
        }
    }
    let grid_q = (1.0 / grid.0).ln();
    let e_inv = (-1.0f64).exp();
    let mut pass = (se.w_star - e_inv).abs() <= 1e-5
        && (se.q_star - 1.0).abs() <= 1e-5
        && (se.w_star - grid.0).abs() <= 1e-5
        && (se.q_star - grid_q).abs() <= 1e-5;
    let mut worst = f64::NEG_INFINITY;
    for (lambda, k) in [(1.0, 1.0), (0.5, 2.0), (2.0, 3.5)] {
        let report = verify_weibull_uniqueness(0.2, 0.9, lambda, k).unwrap();
        worst = worst.max(report.max_second_derivative);
        pass &= report.max_second_derivative <= 1e-8;
    }
    check(pass, format!("w*={:.7} (grid {:.6}) q*={:.7}; max L''={worst:.3e}", se.w_star, grid.0, se.q_star))
}

fn etc_compliance() -> Outcome {
    let d = uniform();
    let se = solve_equilibrium(&d).unwrap();
    let params = BoundParams::from_distribution(&d);
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [100usize, 1_000, 10_000] {
        let mut regrets = Vec::new();
        let mut worst_l1 = 0.0f64;
        for seed in 0..SEEDS {
            let traj = simulate(&d, &SupplierSpec::Etc {}, &RetailerSpec::BestResponse {}, t, streams(seed)).unwrap();
            regrets.push(supplier_regret(&traj, &se));
            worst_l1 = worst_l1.max(l1_last_iterate(&traj, &se));
        }
        let (mean, se_mean) = mean_and_se(&regrets);
        let bound = bound_value(BoundKind::Etc, &params, t).unwrap();
        pass &= mean <= bound + 3.0 * se_mean;
        let mut part = format!("T={t}: regret {mean:.5} <= {bound:.5}");
        if t == 10_000 {
            let l1_bound = bound_value(BoundKind::EtcLastIterate, &params, t).unwrap();
            pass &= worst_l1 <= l1_bound;
            part.push_str(&format!(", max L1 {worst_l1:.5} <= {l1_bound:.5}"));
        }
        parts.push(part);
    }
    check(pass, parts.join("; "))
}

fn piyavskii_compliance() -> Outcome {
    let d = uniform();
    let se = solve_equilibrium(&d).unwrap();
    let m = default_lipschitz(&d).unwrap();
    let params = BoundParams::from_distribution(&d).with_lipschitz(m);
    let t = 1_000;
    let spec = SupplierSpec::Piyavskii { lipschitz: Some(m) };
    let traj = simulate(&d, &spec, &RetailerSpec::BestResponse {}, t, streams(0)).unwrap();
    let simple = simple_regret_curve(&traj, &se, 0.2);
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut simple_ok = true;
    for (i, gap) in simple.iter().enumerate() {
        let b = bound_value(BoundKind::PiyavskiiSimple, &params, i + 1).unwrap();
        simple_ok &= *gap <= b;
        worst_ratio = worst_ratio.max(gap / b);
    }
    let avg = supplier_regret(&traj, &se);
    let avg_bound = bound_value(BoundKind::Piyavskii, &params, t).unwrap();
    check(
        simple_ok && avg <= avg_bound,
        format!("M={m}; max simple-regret/bound {worst_ratio:.4}; average regret {avg:.6} <= {avg_bound:.6}"),
    )
}

fn ftl_unbiased() -> (bool, String) {
    let d = uniform();
    let (w, q) = (0.35, 0.6);
    let truth = retailer_utility(&d, w, q);
    let reps = 20_000;
    let mut estimates = Vec::with_capacity(reps);
    for rep in 0..reps as u64 {
        let s = streams(rep);
        let mut f = FollowTheLeader::new(12, s.stream(Stream::Retailer)).unwrap();
        for t in 1..=6 {
            let (_, p, dem) = d.sample(&mut s.round(Stream::Nature, t));
            f.act(t as usize, w).unwrap();
            f.observe(t as usize, p, dem).unwrap();
        }
        estimates.push(f.estimate(w, q).unwrap());
    }
    let (mean, se) = mean_and_se(&estimates);
    ((mean - truth).abs() <= 3.0 * se, format!("rho-hat mean {mean:.5} vs {truth:.5} (3 SE = {:.5})", 3.0 * se))
}

fn etc_ftl_compliance() -> Outcome {
    let d = uniform();
    let se = solve_equilibrium(&d).unwrap();
    let params = BoundParams::from_distribution(&d);
    let t = 10_000;
    let bound = bound_value(BoundKind::EtcFtl, &params, t).unwrap();
    let regrets: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let traj = simulate(&d, &SupplierSpec::EtcNoCost {}, &RetailerSpec::Ftl {}, t, streams(seed)).unwrap();
            supplier_regret(&traj, &se)
        })
        .collect();
    let compliant = regrets.iter().filter(|r| **r <= bound).count();
    let share = compliant as f64 / regrets.len() as f64;
    let (mean, _) = mean_and_se(&regrets);
    let (unbiased, detail) = ftl_unbiased();
    check(
        share >= 0.9 && unbiased,
        format!("{compliant}/{SEEDS} seeds <= {bound:.4} (mean regret {mean:.5}); {detail}"),
    )
}

fn mean_regret(d: &Arc<JointDistribution>, supplier: &SupplierSpec, retailer: &RetailerSpec, t: usize) -> f64 {
    let se = solve_equilibrium(d).unwrap();
    let regrets: Vec<f64> = (0..SEEDS)
        .map(|seed| supplier_regret(&simulate(d, supplier, retailer, t, streams(seed)).unwrap(), &se))
        .collect();
    mean_and_se(&regrets).0
}

fn rate_signatures() -> Outcome {
    let d = uniform();
    let horizons = [1_000usize, 4_000, 16_000];
    let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
    let etc: Vec<f64> =
        horizons.iter().map(|&t| mean_regret(&d, &SupplierSpec::Etc {}, &RetailerSpec::BestResponse {}, t)).collect();
    let no_cost: Vec<f64> =
        horizons.iter().map(|&t| mean_regret(&d, &SupplierSpec::EtcNoCost {}, &RetailerSpec::Ftl {}, t)).collect();
    let s1 = log_log_slope(&xs, &etc);
    let s2 = log_log_slope(&xs, &no_cost);
    check(
        (-0.7..=-0.3).contains(&s1) && (-0.5..=-0.15).contains(&s2),
        format!("ETC slope {s1:.3} in [-0.7, -0.3]; ETC-noCost slope {s2:.3} in [-0.5, -0.15]"),
    )
}

fn exp3vi_correctness() -> Outcome {
    let mut rng = streams(7).stream(Stream::Learner);
    let mut worst_bias = 0.0f64;
    for k in [2usize, 5, 10] {
        let cols = k + 1;
        for _ in 0..20 {
            let raw: Vec<f64> = (0..k * cols).map(|_| rng.random::<f64>() + 1e-3).collect();
            let z: f64 = raw.iter().sum();
            let mu: Vec<f64> = raw.iter().map(|x| x / z).collect();
            let losses: Vec<f64> = (0..k * cols).map(|_| rng.random()).collect();
            let mut expectation = vec![0.0; k * cols];
            for it in 0..k {
                let row = it * cols..(it + 1) * cols;
                for jt in 0..cols {
                    for (j, e) in row_estimates(&mu[row.clone()], jt, &losses[row.clone()]).iter().enumerate() {
                        expectation[it * cols + j] += mu[it * cols + jt] * e;
                    }
                }
            }
            for (e, l) in expectation.iter().zip(&losses) {
                worst_bias = worst_bias.max((e - l).abs());
            }
        }
    }

    let mut censoring_ok = true;
    for _ in 0..1_000 {
        let learner = Exp3Vi::new(rng.random_range(0.05..1.0), 0.1).unwrap();
        let k = learner.grid_size();
        let action = Action { i: rng.random_range(0..k), j: rng.random_range(0..=k) };
        let demand = if rng.random::<bool>() {
            DemandCurve::Threshold { v: rng.random() }
        } else {
            DemandCurve::Linear { a: rng.random_range(0.0..1.5), b: rng.random_range(0.0..2.0) }
        };
        let c: f64 = rng.random();
        let p = learner.prices()[action.i];
        let dv = demand.eval(p);
        let rebuilt = learner.row_losses(action, learner.quantities()[action.j].min(dv), c).unwrap();
        for (j, l) in rebuilt.iter().enumerate() {
            censoring_ok &= *l == loss(welfare(p, learner.quantities()[j], c, dv));
        }
    }

    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let seq: Vec<Vec<f64>> = (0..200).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        min_slack = min_slack.min(exponential_weights_slack(&seq, 0.1).unwrap());
    }
    check(
        worst_bias <= 1e-12 && censoring_ok && min_slack >= 0.0,
        format!("max estimator bias {worst_bias:.2e}; censoring sufficiency {censoring_ok}; min exponential-weights slack {min_slack:.4}"),
    )
}

fn exp3vi_compliance() -> Outcome {
    let t = 100_000;
    let (gamma, eta) = (default_gamma(t), default_eta(t));
    let generator = PostedPriceGenerator::uniform(0.0);
    let params = BoundParams::default().with_exp3(gamma, eta);
    let bound = bound_value(BoundKind::Exp3Vi, &params, t).unwrap();
    let simplified = bound_value(BoundKind::Exp3ViSimplified, &params, t).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20 {
        let s = streams(seed);
        let instance = generator.generate(t, s).unwrap();
        let run = run_adversarial(&instance, gamma, eta, s).unwrap();
        worst = worst.max(run.regret());
    }
    check(
        worst <= bound,
        format!("max regret {worst:.1} <= {bound:.1} (simplified form {simplified:.1}, reported only)"),
    )
}

fn trend(
    d: &Arc<JointDistribution>,
    supplier: &SupplierSpec,
    retailer: &RetailerSpec,
    seeds: u64,
) -> (f64, f64, f64, f64) {
    let se = solve_equilibrium(d).unwrap();
    let stats = |t: usize| {
        let mut regret = Vec::new();
        let mut l1 = Vec::new();
        for seed in 0..seeds {
            let traj = simulate(d, supplier, retailer, t, streams(seed)).unwrap();
            regret.push(retailer_regret(&traj, &se, d));
            l1.push(l1_last_iterate(&traj, &se));
        }
        (mean_and_se(&regret).0, mean_and_se(&l1).0)
    };
    let (r_small, l_small) = stats(100);
    let (r_large, l_large) = stats(10_000);
    (r_small, r_large, l_small, l_large)
}

fn asymptotic_trends() -> Outcome {
    let d = uniform();
    let m = default_lipschitz(&d).unwrap();
    let piya = trend(&d, &SupplierSpec::Piyavskii { lipschitz: Some(m) }, &RetailerSpec::BestResponse {}, 1);
    let ftl = trend(&d, &SupplierSpec::EtcNoCost {}, &RetailerSpec::Ftl {}, SEEDS);
    // the limit is zero and early exploration can leave the retailer ahead of
    // the benchmark, so the trend is measured as distance from zero
    let ok =
        |(r_small, r_large, l_small, l_large): (f64, f64, f64, f64)| r_large.abs() < r_small.abs() && l_large < l_small;
    let show = |name: &str, (a, b, c, e): (f64, f64, f64, f64)| {
        format!("{name}: |retailer regret| {:.5} -> {:.5}, L1 {c:.5} -> {e:.5}", a.abs(), b.abs())
    };
    check(ok(piya) && ok(ftl), format!("{}; {}", show("Piyavskii", piya), show("ETC-noCost+FTL", ftl)))
}

fn secs(n: u64) -> Option<Duration> {
    Some(Duration::from_secs(n))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 9] = [
        ("closed-form uniform equilibrium and price of anarchy", closed_form_equilibrium, secs(1)),
        ("Weibull equilibrium and concavity certificate", weibull_equilibrium, secs(5)),
        ("ETC regret and last-iterate bounds", etc_compliance, secs(60)),
        ("Piyavskii-Shubert simple and average regret bounds", piyavskii_compliance, secs(10)),
        ("ETC without E[C] against FTL, per-seed bound", etc_ftl_compliance, secs(300)),
        ("log-log regret rate signatures", rate_signatures, None),
        ("Exp3-VI estimator, censoring and exponential-weights inequality", exp3vi_correctness, secs(30)),
        ("Exp3-VI regret bound on posted-price instances", exp3vi_compliance, secs(600)),
        ("retailer regret and L1 trends from T=100 to T=10000", asymptotic_trends, None),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let outcome = within_time(outcome, start.elapsed(), *limit);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name} ({})", i + 1, outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
