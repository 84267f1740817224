//! Experiment commands. Each writes its artifacts under the output
//! directory and prints a short summary.

use std::collections::BTreeMap;
use std::path::PathBuf;

use eigenlab_core::cir::{cir_exact_step, integrated_cir_laplace};
use eigenlab_core::collision::{partial_sum_ladder, DELTA_LADDER};
use eigenlab_core::integrators::{simulate_batch, simulate_batch_endpoints};
use eigenlab_core::model::classify_regime;
use eigenlab_core::stationary::compare_long_run;
use eigenlab_core::stationary::mh_sampler;
use eigenlab_core::stats::rng::domain;
use eigenlab_core::stats::{empirical_laplace, gamma_cdf, ks_test, rng_in_domain, sorted};
use eigenlab_core::{
    CirParams, EventLog, ModelParams, PathRecord, Scheme, StatSummary, StationaryDensity,
    Termination,
};
use rayon::prelude::*;

use crate::acceptance;
use crate::config::{Command, ExperimentSpec};
use crate::output::{self, CsvArtifact};
use crate::CliError;

/// Run one command; summary lines go to `log`. Returns the artifact paths
/// written.
pub fn run_command(
    spec: &ExperimentSpec,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>, CliError> {
    match spec.command {
        Command::Simulate => simulate(spec, log),
        Command::Regime => regime(spec, log),
        Command::PhaseDiagram => phase_diagram(spec, log),
        Command::Verify => verify(spec, log),
        Command::StationaryCompare => stationary_compare(spec, log),
        Command::LaplaceCheck => laplace_check(spec, log),
        Command::CollisionScan => collision_scan(spec, log),
    }
}

fn failures(runs: &[(PathRecord, EventLog)]) -> usize {
    runs.iter()
        .filter(|(r, _)| r.terminated == Termination::NumericalFailure)
        .count()
}

fn check_failures(count: usize, total: usize) -> Result<(), CliError> {
    if count > 0 {
        return Err(CliError::Numerical(format!(
            "{count} of {total} paths produced a non-finite state"
        )));
    }
    Ok(())
}

fn simulate(spec: &ExperimentSpec, log: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>, CliError> {
    let runs = simulate_batch(&spec.params, &spec.config)?;
    let comment = spec.describe();
    let mut traj = CsvArtifact::create(
        &spec.out_dir,
        "trajectories.csv",
        &comment,
        &output::trajectory_header(spec.params.n),
    )?;
    let mut events = CsvArtifact::create(
        &spec.out_dir,
        "events.csv",
        &comment,
        &output::event_header(),
    )?;
    let mut endings: BTreeMap<String, usize> = BTreeMap::new();
    for (path, events_log) in &runs {
        for row in output::trajectory_rows(path) {
            traj.row(row)?;
        }
        for e in &events_log.events {
            events.row(output::event_row(path.path_index, e))?;
        }
        *endings.entry(path.terminated.to_string()).or_default() += 1;
    }
    let files = vec![traj.finish()?, events.finish()?];
    for (k, v) in &endings {
        log(&format!("{k}: {v}"));
    }
    check_failures(failures(&runs), runs.len())?;
    Ok(files)
}

fn regime(spec: &ExperimentSpec, log: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>, CliError> {
    let p = &spec.params;
    let body = format!(
        "n={} alpha={} beta={} gamma={}\n{}",
        p.n,
        p.alpha,
        p.beta,
        p.gamma,
        classify_regime(p)
    );
    log(body.trim_end());
    Ok(vec![output::write_text(
        &spec.out_dir,
        "regime.txt",
        &spec.describe(),
        &body,
    )?])
}

/// Scheme used for the empirical part of a grid point: stopping scheme when
/// `κ < 0`, otherwise the configured one.
fn scheme_for(params: &ModelParams, configured: Scheme) -> Scheme {
    if params.kappa() < 0.0 {
        Scheme::CEpsilon
    } else if configured == Scheme::CEpsilon {
        Scheme::TruncatedEuler
    } else {
        configured
    }
}

pub fn phase_diagram_header() -> Vec<String> {
    output::strings(&[
        "alpha",
        "beta",
        "gamma",
        "n",
        "kappa",
        "global_solution",
        "pair_collisions",
        "zero_hit_lambda1",
        "multiple_collision_k2",
        "scheme",
        "pair_collision_freq",
        "zero_hit_freq",
        "ci_low",
        "ci_high",
    ])
}

fn phase_diagram(
    spec: &ExperimentSpec,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>, CliError> {
    let base = spec.params;
    let points = match &spec.sweep {
        Some(s) => s.points(),
        None => vec![(base.alpha, base.beta, base.gamma)],
    };
    let mut out = CsvArtifact::create(
        &spec.out_dir,
        "phase_diagram.csv",
        &spec.describe(),
        &phase_diagram_header(),
    )?;
    let mut failed = (0, 0);
    for (alpha, beta, gamma) in points {
        let params = ModelParams::new(alpha, beta, gamma, base.n)
            .map_err(|e| CliError::Config(format!("sweep: {e}")))?;
        let report = classify_regime(&params);
        let mut config = spec.config.clone();
        config.scheme = scheme_for(&params, spec.config.scheme);
        let runs = simulate_batch_endpoints(&params, &config)?;
        failed.0 += failures(&runs);
        failed.1 += runs.len();
        let tol = config.collision_tol;
        let pair = runs
            .iter()
            .filter(|(_, l)| l.extremes.min_gap.iter().any(|&g| g <= tol))
            .count();
        let zero = runs
            .iter()
            .filter(|(r, l)| {
                l.extremes.min_partial_sum[0] <= tol || r.terminated == Termination::StoppedAtSEps
            })
            .count();
        let pair_s = StatSummary::proportion("pair", pair, runs.len());
        let zero_s = StatSummary::proportion("zero", zero, runs.len());
        let k2 = report
            .multiple_collision(2)
            .map(|e| e.verdict.to_string())
            .unwrap_or_default();
        out.row([
            alpha.to_string(),
            beta.to_string(),
            gamma.to_string(),
            base.n.to_string(),
            report.kappa.to_string(),
            report.global_solution.to_string(),
            report.pair_collisions.to_string(),
            report.zero_hit_lambda1.to_string(),
            k2,
            config.scheme.to_string(),
            pair_s.estimate.to_string(),
            zero_s.estimate.to_string(),
            pair_s.ci95.0.to_string(),
            pair_s.ci95.1.to_string(),
        ])?;
        log(&format!(
            "alpha={alpha} beta={beta} gamma={gamma} kappa={} global={} pairs={} freq={}",
            report.kappa, report.global_solution, report.pair_collisions, pair_s.estimate
        ));
    }
    let files = vec![out.finish()?];
    check_failures(failed.0, failed.1)?;
    Ok(files)
}

fn verify(spec: &ExperimentSpec, log: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>, CliError> {
    let mut lines = Vec::new();
    let results = acceptance::run_all(spec.config.seed, |r| {
        let line = r.to_string();
        log(&line);
        lines.push(line);
    });
    let body = lines.join("\n") + "\n";
    let file = output::write_text(&spec.out_dir, "acceptance.txt", &spec.describe(), &body)?;
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.to_string())
        .collect();
    if failed.is_empty() {
        Ok(vec![file])
    } else {
        Err(CliError::AcceptanceFailed(failed))
    }
}

fn stationary_compare(
    spec: &ExperimentSpec,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>, CliError> {
    let mut rng = rng_in_domain(spec.config.seed, domain::MH, 0);
    let report = compare_long_run(&spec.params, &spec.config, &spec.mh, &mut rng)?;
    let mut rng = rng_in_domain(spec.config.seed, domain::MH, 1);
    let mh = mh_sampler(&spec.params, &spec.mh, &mut rng)?;
    let (shape, rate) = StationaryDensity::new(&spec.params).sum_law();
    let mh_sums = sorted(mh.samples.sums());
    let mh_vs_gamma = StatSummary::mean_of("mh_sum", &mh_sums)
        .with_ks(ks_test(&mh_sums, |x| gamma_cdf(shape, rate, x))?);
    let mut out = CsvArtifact::create(
        &spec.out_dir,
        "stationary.csv",
        &spec.describe(),
        &output::stats_header(),
    )?;
    let rows = [&report.sum_vs_gamma, &report.sum_vs_mh, &mh_vs_gamma]
        .into_iter()
        .chain(report.marginals_vs_mh.iter());
    for s in rows {
        out.row(output::stats_row(s))?;
        log(&format!(
            "{}: mean={} ks_p={}",
            s.name,
            s.estimate,
            s.ks_p.map(|p| p.to_string()).unwrap_or_default()
        ));
    }
    Ok(vec![out.finish()?])
}

/// `∫₀ᵗ r ds` for each `t` in `times`, from paths of the exact CIR transition
/// on a grid of step `h` integrated by the trapezoid rule. Result is indexed
/// `[time][path]`.
pub fn integrated_cir_samples(
    cir: &CirParams,
    r0: f64,
    h: f64,
    times: &[f64],
    paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, CliError> {
    let marks: Vec<u64> = times
        .iter()
        .map(|&t| (t / h).round().max(1.0) as u64)
        .collect();
    let last = marks.iter().copied().max().unwrap_or(0);
    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_in_domain(seed, domain::EXACT_CIR, i);
            let mut r = r0;
            let mut acc = 0.0;
            let mut at = vec![0.0; marks.len()];
            for k in 1..=last {
                let next = cir_exact_step(cir, r, h, &mut rng)?;
                acc += 0.5 * (r + next) * h;
                r = next;
                for (slot, &m) in at.iter_mut().zip(&marks) {
                    if m == k {
                        *slot = acc;
                    }
                }
            }
            Ok(at)
        })
        .collect::<Result<_, eigenlab_core::Error>>()?;
    Ok((0..times.len())
        .map(|j| per_path.iter().map(|p| p[j]).collect())
        .collect())
}

fn laplace_check(
    spec: &ExperimentSpec,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>, CliError> {
    let cir = CirParams::sum_process(&spec.params);
    let sum0: f64 = spec.config.lambda0.iter().sum();
    let grid = &spec.laplace;
    let samples = integrated_cir_samples(
        &cir,
        sum0,
        grid.h,
        &grid.t,
        spec.config.paths,
        spec.config.seed,
    )?;
    let mut out = CsvArtifact::create(
        &spec.out_dir,
        "laplace.csv",
        &spec.describe(),
        &output::strings(&[
            "mu",
            "t",
            "closed_form",
            "estimate",
            "stderr",
            "z",
            "n_samples",
        ]),
    )?;
    for &mu in &grid.mu {
        for (j, &t) in grid.t.iter().enumerate() {
            let closed = integrated_cir_laplace(&spec.params, sum0, mu, t)?.value;
            let emp = empirical_laplace(&samples[j], mu);
            let z = (emp.estimate - closed) / emp.stderr;
            out.row([
                mu.to_string(),
                t.to_string(),
                closed.to_string(),
                emp.estimate.to_string(),
                emp.stderr.to_string(),
                z.to_string(),
                emp.n_samples.to_string(),
            ])?;
            log(&format!(
                "mu={mu} t={t} closed={closed} estimate={} z={z}",
                emp.estimate
            ));
        }
    }
    Ok(vec![out.finish()?])
}

fn collision_scan(
    spec: &ExperimentSpec,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<PathBuf>, CliError> {
    let n = spec.params.n;
    let runs = simulate_batch_endpoints(&spec.params, &spec.config)?;
    let mut rows: Vec<StatSummary> = Vec::new();
    for k in 1..=n {
        let mins: Vec<f64> = runs
            .iter()
            .map(|(_, l)| l.extremes.min_partial_sum[k - 1])
            .collect();
        rows.extend(partial_sum_ladder(&mins, k));
    }
    for i in 1..n {
        for &d in &DELTA_LADDER {
            let hits = runs
                .iter()
                .filter(|(_, l)| l.extremes.min_gap[i - 1] <= d)
                .count();
            rows.push(StatSummary::proportion(
                format!("pair_gap{i}_delta{d:e}"),
                hits,
                runs.len(),
            ));
        }
    }
    let tol = spec.config.collision_tol;
    let multiple = runs
        .iter()
        .filter(|(_, l)| l.extremes.min_second_gap <= tol)
        .count();
    let multiple_pre = runs
        .iter()
        .filter(|(_, l)| l.extremes.min_second_gap_before_joint <= tol)
        .count();
    let stopped = runs
        .iter()
        .filter(|(r, _)| {
            matches!(
                r.terminated,
                Termination::StoppedAtSEps | Termination::StoppedAtZetaEps
            )
        })
        .count();
    rows.push(StatSummary::proportion(
        "multiple_collision",
        multiple,
        runs.len(),
    ));
    rows.push(StatSummary::proportion(
        "multiple_collision_before_joint",
        multiple_pre,
        runs.len(),
    ));
    rows.push(StatSummary::proportion("stopped", stopped, runs.len()));
    let mut out = CsvArtifact::create(
        &spec.out_dir,
        "collisions.csv",
        &spec.describe(),
        &output::stats_header(),
    )?;
    for s in &rows {
        out.row(output::stats_row(s))?;
        log(&format!(
            "{}: {} [{}, {}]",
            s.name, s.estimate, s.ci95.0, s.ci95.1
        ));
    }
    let files = vec![out.finish()?];
    check_failures(failures(&runs), runs.len())?;
    Ok(files)
}
