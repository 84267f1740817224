//! Acceptance suite. Every check runs at its stated size and tolerance and
//! yields one pass/fail line.

use std::fmt;
use std::fs;
use std::path::Path;

use eigenlab_core::cir::{cir_exact_step, integrated_cir_laplace, laplace_phi_psi};
use eigenlab_core::collision::partial_sum_ladder;
use eigenlab_core::integrators::{
    simulate_batch_endpoints, simulate_coupled, simulate_coupled_cir,
};
use eigenlab_core::model::{classify_regime, drift_lambda, grad_v, potential_v};
use eigenlab_core::stationary::{mh_sampler, MhConfig};
use eigenlab_core::stats::rng::domain;
use eigenlab_core::stats::{
    empirical_laplace, finite_diff_gradient, gamma_cdf, ks_test, ks_two_sample, mean_stderr,
    rng_in_domain, sorted,
};
use eigenlab_core::{
    CirParams, EventLog, GlobalSolution, ModelParams, PathRecord, Scheme, SimConfig,
    StationaryDensity, Termination,
};
use rand::Rng;

use crate::commands::{integrated_cir_samples, run_command};
use crate::config::{Command, ExperimentSpec, FileConfig, Overrides};

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<3} {}: {}", self.id, self.title, self.detail)
    }
}

/// Level at which same-step double events are counted.
const MULTIPLE_DELTA: f64 = 1e-4;

/// Per-run tally of same-step double events, collected for the
/// no-multiple-collision check.
#[derive(Debug, Clone)]
struct MultipleTally {
    label: String,
    paths: usize,
    hits: usize,
}

fn tally(label: &str, params: &ModelParams, runs: &[(PathRecord, EventLog)]) -> MultipleTally {
    // past the joint event the solution no longer exists when
    // κ < 1 − β, so only steps before it count there
    let global = classify_regime(params).global_solution != GlobalSolution::UntilJointEvent;
    let hits = runs
        .iter()
        .filter(|(_, l)| {
            let m = if global {
                l.extremes.min_second_gap
            } else {
                l.extremes.min_second_gap_before_joint
            };
            m <= MULTIPLE_DELTA
        })
        .count();
    MultipleTally {
        label: label.to_string(),
        paths: runs.len(),
        hits,
    }
}

fn params(alpha: f64, beta: f64, gamma: f64, n: usize) -> ModelParams {
    ModelParams::new(alpha, beta, gamma, n).expect("fixed acceptance parameters are valid")
}

fn config(n: usize, seed: u64, dt: f64, horizon: f64, paths: usize) -> SimConfig {
    let mut c = SimConfig::new(n);
    c.seed = seed;
    c.dt = dt;
    c.horizon = horizon;
    c.paths = paths;
    c.collision_tol = MULTIPLE_DELTA;
    c
}

fn fail(id: &'static str, title: &'static str, e: impl fmt::Display) -> CriterionResult {
    CriterionResult {
        id,
        title,
        passed: false,
        detail: format!("error: {e}"),
    }
}

fn result(id: &'static str, title: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        title,
        passed,
        detail,
    }
}

/// Runs every check in order, handing each result to `report` as soon as
/// it is known.
pub fn run_all(seed: u64, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut tallies = Vec::new();
    let mut emit = |r: CriterionResult, out: &mut Vec<CriterionResult>| {
        report(&r);
        out.push(r);
    };
    for r in sum_law(seed, &mut tallies) {
        emit(r, &mut out);
    }
    for r in stationary_sum(seed, &mut tallies) {
        emit(r, &mut out);
    }
    emit(contraction(seed, &mut tallies), &mut out);
    for r in collision_phases(seed, &mut tallies) {
        emit(r, &mut out);
    }
    for r in multiple_zero_hits(seed, &mut tallies) {
        emit(r, &mut out);
    }
    emit(no_multiple_collisions(&tallies), &mut out);
    for r in laplace(seed) {
        emit(r, &mut out);
    }
    for r in gradient_and_drift(seed) {
        emit(r, &mut out);
    }
    emit(coupling_order(seed), &mut out);
    emit(determinism(seed), &mut out);
    out
}

fn sum_law(seed: u64, tallies: &mut Vec<MultipleTally>) -> Vec<CriterionResult> {
    const T1: &str = "sum law KS vs exact CIR, dt=1e-3";
    const T2: &str = "sum law KS distance decreasing in dt";
    let p = params(2.0, 0.4, 1.0, 3);
    let paths = 10_000;
    let cir = CirParams::sum_process(&p);
    let start = config(3, seed, 1e-3, 1.0, paths);
    let s0: f64 = start.lambda0.iter().sum();
    let exact: Result<Vec<f64>, _> = (0..paths as u64)
        .map(|i| {
            let mut rng = rng_in_domain(seed, domain::EXACT_CIR, i);
            cir_exact_step(&cir, s0, 1.0, &mut rng)
        })
        .collect();
    let exact = match exact {
        Ok(v) => sorted(v),
        Err(e) => return vec![fail("1a", T1, &e), fail("1b", T2, e)],
    };
    // all levels see the same Brownian path on the 1e-3 grid
    let mut ds = Vec::new();
    let mut finest = None;
    for (dt, refine) in [(4e-3, 4), (2e-3, 2), (1e-3, 1)] {
        let mut c = start.clone();
        c.dt = dt;
        c.noise_refine = refine;
        let runs = match simulate_batch_endpoints(&p, &c) {
            Ok(r) => r,
            Err(e) => return vec![fail("1a", T1, &e), fail("1b", T2, e)],
        };
        tallies.push(tally(&format!("sum law dt={dt}"), &p, &runs));
        let sums = sorted(runs.iter().map(|(r, _)| r.final_state().sum()).collect());
        match ks_two_sample(&sums, &exact) {
            Ok(ks) => {
                ds.push(ks.d);
                finest = Some(ks);
            }
            Err(e) => return vec![fail("1a", T1, &e), fail("1b", T2, e)],
        }
    }
    let ks = finest.expect("three levels ran");
    let decreasing = ds.windows(2).all(|w| w[1] < w[0]);
    vec![
        result(
            "1a",
            T1,
            ks.p > 0.01,
            format!("D={:.4} p={:.3} (need p > 0.01)", ks.d, ks.p),
        ),
        result(
            "1b",
            T2,
            decreasing,
            format!(
                "D at dt=4e-3,2e-3,1e-3: {:.4}, {:.4}, {:.4}",
                ds[0], ds[1], ds[2]
            ),
        ),
    ]
}

fn stationary_sum(seed: u64, tallies: &mut Vec<MultipleTally>) -> Vec<CriterionResult> {
    const T1: &str = "endpoint sum KS vs Gamma(2, 1)";
    const T2: &str = "Metropolis sum KS vs Gamma(2, 1)";
    let p = params(2.0, 0.5, 1.0, 2);
    let c = config(2, seed, 1e-3, 20.0, 10_000);
    let mh = MhConfig::default();
    let (shape, rate) = StationaryDensity::new(&p).sum_law();
    let first = match simulate_batch_endpoints(&p, &c) {
        Ok(runs) => {
            tallies.push(tally("stationary", &p, &runs));
            let sums = sorted(runs.iter().map(|(r, _)| r.final_state().sum()).collect());
            match ks_test(&sums, |x| gamma_cdf(shape, rate, x)) {
                Ok(ks) => result(
                    "2a",
                    T1,
                    ks.p > 0.01 && shape == 2.0 && rate == 1.0,
                    format!(
                        "D={:.4} p={:.3} over {} paths (need p > 0.01)",
                        ks.d,
                        ks.p,
                        sums.len()
                    ),
                ),
                Err(e) => fail("2a", T1, e),
            }
        }
        Err(e) => fail("2a", T1, e),
    };
    let mut rng = rng_in_domain(seed, domain::MH, 1);
    let second = match mh_sampler(&p, &mh, &mut rng) {
        Ok(run) => {
            let sums = sorted(run.samples.sums());
            match ks_test(&sums, |x| gamma_cdf(shape, rate, x)) {
                Ok(ks) => result(
                    "2b",
                    T2,
                    ks.p > 0.01,
                    format!(
                        "D={:.4} p={:.3} over {} samples (need p > 0.01)",
                        ks.d,
                        ks.p,
                        sums.len()
                    ),
                ),
                Err(e) => fail("2b", T2, e),
            }
        }
        Err(e) => fail("2b", T2, e),
    };
    vec![first, second]
}

fn contraction(seed: u64, tallies: &mut Vec<MultipleTally>) -> CriterionResult {
    const T: &str = "contraction E|l - l~| <= e^{-2t} E|l0 - l~0|";
    // gaps stay well above √(4βλ dt), where explicit steps stop contracting
    let p = params(8.0, 3.0, 1.0, 3);
    let mut c = config(3, seed, 1e-3, 2.0, 1);
    c.record_stride = 500;
    let paths = 1000;
    let checkpoints = [0.5, 1.0, 2.0];
    let mut dist0 = Vec::with_capacity(paths);
    let mut dist: Vec<Vec<f64>> = vec![Vec::with_capacity(paths); checkpoints.len()];
    let mut runs = Vec::new();
    for i in 0..paths as u64 {
        let mut rng = rng_in_domain(seed, domain::MISC, i);
        let mut b: Vec<f64> = c
            .lambda0
            .iter()
            .map(|&l| l + rng.random_range(-0.05..0.05))
            .collect();
        b.sort_by(f64::total_cmp);
        let (pa, pb) = match simulate_coupled(&p, &p, &c, Some(&b), i) {
            Ok(x) => x,
            Err(e) => return fail("3", T, e),
        };
        let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).sum::<f64>();
        dist0.push(gap(&c.lambda0, &b));
        for (j, &t) in checkpoints.iter().enumerate() {
            match (pa.state_at(t), pb.state_at(t)) {
                (Some(x), Some(y)) => dist[j].push(gap(&x.lambda, &y.lambda)),
                _ => return fail("3", T, format!("state at t={t} not recorded")),
            }
        }
        runs.push((
            pa.clone(),
            eigenlab_core::collision::detect_events(&pa, MULTIPLE_DELTA),
        ));
        runs.push((
            pb.clone(),
            eigenlab_core::collision::detect_events(&pb, MULTIPLE_DELTA),
        ));
    }
    tallies.push(tally("contraction", &p, &runs));
    let (m0, _) = mean_stderr(&dist0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, &t) in checkpoints.iter().enumerate() {
        let (m, se) = mean_stderr(&dist[j]);
        let bound = (-2.0 * t).exp() * m0 * (1.0 + 3.0 * se / m);
        ok &= m <= bound;
        parts.push(format!("t={t}: {m:.5} <= {bound:.5}"));
    }
    result("3", T, ok, parts.join(", "))
}

fn collision_phases(seed: u64, tallies: &mut Vec<MultipleTally>) -> Vec<CriterionResult> {
    const TA: &str = "beta=1.2: no pair collision at 1e-4";
    const TB: &str = "beta=0.5 kappa=1.1: pair collisions >= 0.99";
    const TC: &str = "kappa=-0.1: stopped at S_eps >= 0.99";
    let mut out = Vec::new();

    let p = params(4.0, 1.2, 0.0, 3);
    let c = config(3, seed, 1e-3, 10.0, 1000);
    out.push(match simulate_batch_endpoints(&p, &c) {
        Ok(runs) => {
            tallies.push(tally("beta=1.2", &p, &runs));
            let hits = runs
                .iter()
                .filter(|(_, l)| l.extremes.min_gap.iter().any(|&g| g <= 1e-4))
                .count();
            let min = runs
                .iter()
                .flat_map(|(_, l)| l.extremes.min_gap.iter().copied())
                .fold(f64::INFINITY, f64::min);
            result(
                "4a",
                TA,
                hits == 0,
                format!("{hits} of {} paths, smallest gap {min:.2e}", runs.len()),
            )
        }
        Err(e) => fail("4a", TA, e),
    });

    let p = params(1.6, 0.5, 1.0, 2);
    let c = config(2, seed, 1e-3, 100.0, 1000);
    out.push(match simulate_batch_endpoints(&p, &c) {
        Ok(runs) => {
            tallies.push(tally("kappa=1.1", &p, &runs));
            let hits = runs
                .iter()
                .filter(|(_, l)| l.extremes.min_gap[0] <= 1e-3)
                .count();
            let f = hits as f64 / runs.len() as f64;
            result(
                "4b",
                TB,
                f >= 0.99,
                format!("{hits} of {} paths reach gap 1e-3", runs.len()),
            )
        }
        Err(e) => fail("4b", TB, e),
    });

    let p = params(0.4, 0.5, 0.0, 2);
    let mut c = config(2, seed, 1e-3, 100.0, 1000);
    c.scheme = Scheme::CEpsilon;
    c.epsilon = 1e-3;
    out.push(match simulate_batch_endpoints(&p, &c) {
        Ok(runs) => {
            tallies.push(tally("kappa=-0.1", &p, &runs));
            let stopped = runs
                .iter()
                .filter(|(r, _)| r.terminated == Termination::StoppedAtSEps)
                .count();
            let f = stopped as f64 / runs.len() as f64;
            result(
                "4c",
                TC,
                f >= 0.99,
                format!("{stopped} of {} paths stopped, eps=1e-3", runs.len()),
            )
        }
        Err(e) => fail("4c", TC, e),
    });
    out
}

fn multiple_zero_hits(seed: u64, tallies: &mut Vec<MultipleTally>) -> Vec<CriterionResult> {
    const TA: &str = "alpha=1: l1+l2 reaches 1e-3 in >= 0.95";
    const TB: &str = "alpha=2: l1+l2 reaches 1e-3 in <= 0.01";
    const TC: &str = "alpha=2: fraction decreasing in dt";
    let mut out = Vec::new();
    let k2_fraction = |runs: &[(PathRecord, EventLog)]| {
        let mins: Vec<f64> = runs
            .iter()
            .map(|(_, l)| l.extremes.min_partial_sum[1])
            .collect();
        partial_sum_ladder(&mins, 2)
            .into_iter()
            .find(|s| s.name.ends_with("delta1e-3"))
            .expect("ladder contains 1e-3")
    };

    let p = params(1.0, 0.4, 0.5, 3);
    let c = config(3, seed, 1e-3, 200.0, 1000);
    out.push(match simulate_batch_endpoints(&p, &c) {
        Ok(runs) => {
            tallies.push(tally("alpha=1", &p, &runs));
            let s = k2_fraction(&runs);
            result(
                "5a",
                TA,
                s.estimate >= 0.95,
                format!(
                    "fraction {} CI [{:.3}, {:.3}]",
                    s.estimate, s.ci95.0, s.ci95.1
                ),
            )
        }
        Err(e) => fail("5a", TA, e),
    });

    // horizon 50: the pair drifts away from zero when γ = 0
    let p = params(2.0, 0.4, 0.0, 3);
    let mut fractions = Vec::new();
    for (dt, refine) in [(2e-3, 4), (1e-3, 2), (5e-4, 1)] {
        let mut c = config(3, seed, dt, 50.0, 1000);
        c.noise_refine = refine;
        match simulate_batch_endpoints(&p, &c) {
            Ok(runs) => {
                tallies.push(tally(&format!("alpha=2 dt={dt}"), &p, &runs));
                fractions.push(k2_fraction(&runs));
            }
            Err(e) => {
                out.push(fail("5b", TB, &e));
                out.push(fail("5c", TC, e));
                return out;
            }
        }
    }
    let at = &fractions[1];
    out.push(result(
        "5b",
        TB,
        at.estimate <= 0.01,
        format!(
            "fraction {} at dt=1e-3 CI [{:.4}, {:.4}]",
            at.estimate, at.ci95.0, at.ci95.1
        ),
    ));
    let fs: Vec<f64> = fractions.iter().map(|s| s.estimate).collect();
    out.push(result(
        "5c",
        TC,
        fs.windows(2).all(|w| w[1] < w[0]),
        format!("dt=2e-3,1e-3,5e-4: {}, {}, {}", fs[0], fs[1], fs[2]),
    ));
    out
}

fn no_multiple_collisions(tallies: &[MultipleTally]) -> CriterionResult {
    const T: &str = "no same-step double events at 1e-4";
    let paths: usize = tallies.iter().map(|t| t.paths).sum();
    let bad: Vec<String> = tallies
        .iter()
        .filter(|t| t.hits > 0)
        .map(|t| format!("{}: {}", t.label, t.hits))
        .collect();
    let detail = if bad.is_empty() {
        format!("0 over {paths} paths in {} runs", tallies.len())
    } else {
        bad.join(", ")
    };
    result("6", T, bad.is_empty() && !tallies.is_empty(), detail)
}

fn laplace(seed: u64) -> Vec<CriterionResult> {
    const TA: &str = "integrated CIR Laplace within 4 stderr";
    const TB: &str = "psi large-t limit";
    // n = 3, so the prefactor nα differs from 2α
    let p = params(1.0, 0.4, 1.0, 3);
    let sum0 = 3.0;
    let times = [0.5, 1.0, 2.0];
    let mus = [0.5, 1.0];
    let first = match integrated_cir_samples(
        &CirParams::sum_process(&p),
        sum0,
        5e-3,
        &times,
        100_000,
        seed,
    ) {
        Ok(samples) => {
            let mut worst: f64 = 0.0;
            let mut err = None;
            for &mu in &mus {
                for (j, &t) in times.iter().enumerate() {
                    match integrated_cir_laplace(&p, sum0, mu, t) {
                        Ok(q) => {
                            let emp = empirical_laplace(&samples[j], mu);
                            worst = worst.max((emp.estimate - q.value).abs() / emp.stderr);
                        }
                        Err(e) => err = Some(e),
                    }
                }
            }
            match err {
                Some(e) => fail("7a", TA, e),
                None => result(
                    "7a",
                    TA,
                    worst <= 4.0,
                    format!("largest |z| = {worst:.2} over 6 points"),
                ),
            }
        }
        Err(e) => fail("7a", TA, e),
    };
    let mut worst: f64 = 0.0;
    for gamma in [0.0, 0.5, 1.0, 2.0] {
        for mu in [0.1, 0.5, 1.0, 4.0] {
            let (_, psi) = laplace_phi_psi(gamma, mu, 1e3);
            let limit = mu / ((gamma * gamma + 2.0 * mu).sqrt() + gamma);
            worst = worst.max((psi - limit).abs());
        }
    }
    let second = result(
        "7b",
        TB,
        worst <= 1e-9,
        format!("max deviation {worst:.1e} at t=1000"),
    );
    vec![first, second]
}

fn gradient_and_drift(seed: u64) -> Vec<CriterionResult> {
    const TA: &str = "grad V vs finite differences";
    const TB: &str = "drift sum identity within 8 ulps";
    let mut rng = rng_in_domain(seed, domain::MISC, 1 << 40);
    let mut worst: f64 = 0.0;
    let mut error = None;
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let p = params(
            rng.random_range(0.5..4.0),
            rng.random_range(0.1..2.0),
            rng.random_range(0.0..2.0),
            n,
        );
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        x.sort_by(f64::total_cmp);
        // keep the point interior: distinct squares
        for i in 1..n {
            if x[i] - x[i - 1] < 0.1 {
                x[i] = x[i - 1] + 0.1;
            }
        }
        let g = match grad_v(&p, &x) {
            Ok(g) => g,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        let fd = match finite_diff_gradient(|y| potential_v(&p, y), &x, 1e-5) {
            Ok(v) => v,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        let scale = g.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    let first = match error {
        Some(e) => fail("8a", TA, e),
        None => result(
            "8a",
            TA,
            worst <= 1e-6,
            format!("max relative error {worst:.1e} at 100 points"),
        ),
    };

    let mut worst_ratio: f64 = 0.0;
    let mut error = None;
    for _ in 0..10_000 {
        let n = rng.random_range(2..=6);
        let p = params(
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..3.0),
            rng.random_range(-1.0..2.0),
            n,
        );
        let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        l.sort_by(f64::total_cmp);
        if l.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let d = match drift_lambda(&p, &l) {
            Ok(d) => d,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        let total: f64 = d.iter().sum();
        let expected = n as f64 * p.alpha - 2.0 * p.gamma * l.iter().sum::<f64>();
        // magnitude of every summand entering the drift sum
        let mut mag = 0.0;
        for i in 0..n {
            mag += p.alpha.abs() + (2.0 * p.gamma * l[i]).abs();
            for j in 0..n {
                if j != i {
                    mag += (p.beta * (l[i] + l[j]) / (l[i] - l[j])).abs();
                }
            }
        }
        worst_ratio = worst_ratio.max((total - expected).abs() / (mag * f64::EPSILON));
    }
    let second = match error {
        Some(e) => fail("8b", TB, e),
        None => result(
            "8b",
            TB,
            worst_ratio <= 8.0,
            format!("max error {worst_ratio:.2} ulps of the summand magnitude"),
        ),
    };
    vec![first, second]
}

fn coupling_order(seed: u64) -> CriterionResult {
    const T: &str = "coupled CIR with a1 > a2 stays ordered";
    let hi = CirParams {
        a: 3.0,
        b: 1.0,
        sigma: 2.0,
    };
    let lo = CirParams {
        a: 2.0,
        b: 1.0,
        sigma: 2.0,
    };
    let mut c = config(1, seed, 1e-3, 5.0, 1);
    c.record_stride = 1;
    let mut violations = 0;
    let mut checked = 0usize;
    for i in 0..1000 {
        match simulate_coupled_cir(&hi, &lo, (1.0, 1.0), &c, i) {
            Ok((a, b)) => {
                checked += a.values.len();
                if a.values.iter().zip(&b.values).any(|(x, y)| x < y) {
                    violations += 1;
                }
            }
            Err(e) => return fail("9", T, e),
        }
    }
    result(
        "9",
        T,
        violations == 0,
        format!("{violations} of 1000 paths out of order, {checked} recorded times"),
    )
}

fn same_files(a: &Path, b: &Path) -> std::io::Result<Vec<String>> {
    let mut names: Vec<_> = fs::read_dir(a)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let mut differ = Vec::new();
    for name in names {
        if fs::read(a.join(&name))? != fs::read(b.join(&name))? {
            differ.push(name.to_string_lossy().into_owned());
        }
    }
    Ok(differ)
}

fn determinism(seed: u64) -> CriterionResult {
    const T: &str = "identical reruns give identical bytes";
    let file = "alpha = 2.0\nbeta = 0.5\ngamma = 0.5\nn = 3\npaths = 8\nhorizon = 0.5\nrecord_stride = 5\n\
                sweep = \"alpha=0.4,1.2\"\nlaplace_t = [0.5]\nlaplace_mu = [1.0]\nmh_samples = 200\nmh_burn_in = 500\nmh_thin = 2\n";
    let commands = [
        Command::Simulate,
        Command::Regime,
        Command::PhaseDiagram,
        Command::CollisionScan,
        Command::LaplaceCheck,
        Command::StationaryCompare,
    ];
    let dirs = match (tempfile::tempdir(), tempfile::tempdir()) {
        (Ok(a), Ok(b)) => [a, b],
        (Err(e), _) | (_, Err(e)) => return fail("10", T, e),
    };
    let mut compared = 0;
    for cmd in commands {
        for dir in &dirs {
            let flags = Overrides {
                out: Some(dir.path().join(cmd.name())),
                seed: Some(seed),
                ..Default::default()
            };
            let spec = FileConfig::parse(file).and_then(|f| ExperimentSpec::build(cmd, f, &flags));
            if let Err(e) = spec.and_then(|s| run_command(&s, &mut |_| {})) {
                return fail("10", T, format!("{cmd}: {e}"));
            }
        }
        match same_files(
            &dirs[0].path().join(cmd.name()),
            &dirs[1].path().join(cmd.name()),
        ) {
            Ok(d) if d.is_empty() => compared += 1,
            Ok(d) => return result("10", T, false, format!("{cmd}: {} differ", d.join(", "))),
            Err(e) => return fail("10", T, e),
        }
    }
    result(
        "10",
        T,
        true,
        format!("{compared} commands rerun byte-identically"),
    )
}
