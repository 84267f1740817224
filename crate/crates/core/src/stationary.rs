//! Stationary law of the particle system for `γ > 0` and `κ > 0`.
//!
//! On the ordered cone the invariant density is proportional to
//!
//! ```text
//! Πᵢ (λⁱ)^{(κ−2)/2} e^{−γλⁱ} · Π_{i<j} (λʲ−λⁱ)^β
//! ```
//!
//! whose total mass `Σλ` is `Gamma(nα/2, rate γ)`. This module evaluates
//! it, samples it by random-walk Metropolis, estimates its normalizing
//! constant and compares long simulations against it.

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::integrators::{simulate_batch_endpoints, SimConfig};
use crate::model::{classify_regime, GlobalSolution, ModelParams};
use crate::stats::{gamma_cdf, ks_test, ks_two_sample, ln_gamma, mean_stderr, sorted, StatSummary};

fn check_evaluable(params: &ModelParams) -> Result<()> {
    let kappa = params.kappa();
    if !(params.gamma > 0.0 && kappa > 0.0) {
        return Err(Error::NotEvaluable {
            gamma: params.gamma,
            kappa,
        });
    }
    Ok(())
}

/// Log of the unnormalized invariant density:
///
/// ```text
/// −½ Σ ln λⁱ + Σ [ ((κ−1)/2) ln λⁱ − γλⁱ ] + (β/2) Σᵢ Σ_{j≠i} ln |λʲ−λⁱ|
/// ```
///
/// `−∞` off the open ordered cone `0 < λ¹ < ... < λⁿ`.
pub fn log_density_unnormalized(params: &ModelParams, lambda: &[f64]) -> Result<f64> {
    check_evaluable(params)?;
    params.check_dim(lambda.len())?;
    Ok(log_density_raw(params, lambda))
}

fn log_density_raw(p: &ModelParams, l: &[f64]) -> f64 {
    if !(l[0] > 0.0) || l.windows(2).any(|w| !(w[0] < w[1])) || !l[l.len() - 1].is_finite() {
        return f64::NEG_INFINITY;
    }
    let c = (p.kappa() - 2.0) / 2.0;
    let mut s = 0.0;
    for (i, &li) in l.iter().enumerate() {
        s += c * li.ln() - p.gamma * li;
        for &lj in &l[i + 1..] {
            // the double sum counts each pair twice
            s += p.beta * (lj - li).ln();
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDensity {
    pub params: ModelParams,
    /// Log normalizing constant, once estimated.
    pub log_z: Option<f64>,
    pub evaluable: bool,
}

impl StationaryDensity {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            params: *params,
            log_z: None,
            evaluable: check_evaluable(params).is_ok(),
        }
    }

    pub fn log_unnormalized(&self, lambda: &[f64]) -> Result<f64> {
        log_density_unnormalized(&self.params, lambda)
    }

    /// Normalized log density; needs `log_z`.
    pub fn log_pdf(&self, lambda: &[f64]) -> Result<f64> {
        let z = self
            .log_z
            .ok_or_else(|| Error::InvalidConfig("log_z: not estimated".into()))?;
        Ok(self.log_unnormalized(lambda)? - z)
    }

    /// `(shape, rate)` of the law of `Σλ`.
    pub fn sum_law(&self) -> (f64, f64) {
        (
            self.params.n as f64 * self.params.alpha / 2.0,
            self.params.gamma,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn sums(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.iter().sum()).collect()
    }

    /// Coordinate `i` (0-based) of every point.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    /// Starting point; the default is `(1, 2, ..., n)` scaled to the mean
    /// of the sum law.
    pub start: Option<Vec<f64>>,
    pub initial_scale: f64,
    pub target_acceptance: f64,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            burn_in: 20_000,
            samples: 10_000,
            thin: 100,
            start: None,
            initial_scale: 0.5,
            target_acceptance: 0.3,
        }
    }
}

/// Output of [`mh_sampler`].
#[derive(Debug, Clone, PartialEq)]
pub struct MhRun {
    pub samples: SampleSet,
    /// Acceptance rate after burn-in.
    pub acceptance: f64,
    /// Frozen proposal scale.
    pub scale: f64,
}

/// Random-walk Metropolis on the ordered cone: every coordinate is
/// perturbed by an independent Gaussian, then the proposal is sorted. The
/// proposal kernel stays symmetric after sorting, so the plain density
/// ratio is the acceptance probability. The scale adapts towards the target
/// acceptance during burn-in and is frozen afterwards.
pub fn mh_sampler<R: Rng + ?Sized>(
    params: &ModelParams,
    cfg: &MhConfig,
    rng: &mut R,
) -> Result<MhRun> {
    check_evaluable(params)?;
    if cfg.thin == 0 || cfg.samples == 0 {
        return Err(Error::InvalidConfig("thin, samples: must be >= 1".into()));
    }
    let n = params.n;
    let mut x = match &cfg.start {
        Some(s) => {
            params.check_dim(s.len())?;
            s.clone()
        }
        None => {
            let mean = n as f64 * params.alpha / (2.0 * params.gamma);
            let w = mean / (n * (n + 1) / 2) as f64;
            (1..=n).map(|i| i as f64 * w).collect()
        }
    };
    let mut lp = log_density_raw(params, &x);
    if !lp.is_finite() {
        return Err(Error::DomainError(
            "start point outside the ordered cone".into(),
        ));
    }
    let mut log_scale = cfg.initial_scale.ln();
    let mut prop = vec![0.0; n];
    let normal = rand_distr::StandardNormal;
    let mut step = |x: &mut Vec<f64>, lp: &mut f64, scale: f64, rng: &mut R| -> bool {
        for (p, &xi) in prop.iter_mut().zip(x.iter()) {
            let z: f64 = normal.sample(rng);
            *p = xi + scale * z;
        }
        prop.sort_unstable_by(f64::total_cmp);
        let lq = log_density_raw(params, &prop);
        let u: f64 = rng.random();
        if lq > f64::NEG_INFINITY && u.ln() < lq - *lp {
            x.copy_from_slice(&prop);
            *lp = lq;
            true
        } else {
            false
        }
    };
    for k in 0..cfg.burn_in {
        let acc = step(&mut x, &mut lp, log_scale.exp(), rng);
        // Robbins-Monro on the log scale
        let rate = 1.0 / ((k + 1) as f64).sqrt().max(10.0);
        log_scale += rate * (f64::from(u8::from(acc)) - cfg.target_acceptance);
    }
    let scale = log_scale.exp();
    let mut accepted = 0usize;
    let mut points = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            accepted += usize::from(step(&mut x, &mut lp, scale, rng));
        }
        points.push(x.clone());
    }
    Ok(MhRun {
        samples: SampleSet {
            points,
            weights: None,
        },
        acceptance: accepted as f64 / (cfg.samples * cfg.thin) as f64,
        scale,
    })
}

/// KS comparison of a long simulation against the stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRunReport {
    /// Endpoint `Σλ` against the exact Gamma law.
    pub sum_vs_gamma: StatSummary,
    /// Endpoint `Σλ` against the Metropolis sample (two-sample KS).
    pub sum_vs_mh: StatSummary,
    /// Each endpoint coordinate against its Metropolis marginal.
    pub marginals_vs_mh: Vec<StatSummary>,
}

/// Simulate `config.paths` paths to `config.horizon` and compare the
/// endpoint law with the stationary law. Only meaningful when solutions are
/// global (`κ ≥ 1 − β`).
pub fn compare_long_run<R: Rng + ?Sized>(
    params: &ModelParams,
    config: &SimConfig,
    mh: &MhConfig,
    rng: &mut R,
) -> Result<LongRunReport> {
    check_evaluable(params)?;
    let regime = classify_regime(params);
    if regime.global_solution != GlobalSolution::Global {
        return Err(Error::RegimeMismatch(format!(
            "long-run comparison needs global solutions (kappa >= 1 - beta), got kappa={}, beta={}",
            params.kappa(),
            params.beta
        )));
    }
    let runs = simulate_batch_endpoints(params, config)?;
    let ends: Vec<Vec<f64>> = runs
        .iter()
        .map(|(r, _)| r.final_state().lambda.clone())
        .collect();
    let mh_run = mh_sampler(params, mh, rng)?;
    let (shape, rate) = StationaryDensity::new(params).sum_law();
    let sums = sorted(ends.iter().map(|l| l.iter().sum()).collect());
    let ks = ks_test(&sums, |x| gamma_cdf(shape, rate, x))?;
    let sum_vs_gamma = StatSummary::mean_of("endpoint_sum", &sums).with_ks(ks);
    let mh_sums = sorted(mh_run.samples.sums());
    let sum_vs_mh =
        StatSummary::mean_of("endpoint_sum_vs_mh", &sums).with_ks(ks_two_sample(&sums, &mh_sums)?);
    let marginals_vs_mh = (0..params.n)
        .map(|i| {
            let a = sorted(ends.iter().map(|l| l[i]).collect());
            let b = sorted(mh_run.samples.marginal(i));
            Ok(StatSummary::mean_of(format!("lambda_{}", i + 1), &a)
                .with_ks(ks_two_sample(&a, &b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LongRunReport {
        sum_vs_gamma,
        sum_vs_mh,
        marginals_vs_mh,
    })
}

/// How to estimate the log normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogZMethod {
    /// Tensor Gauss-Legendre rule with `nodes` points per axis (`n ≤ 3`).
    Quadrature { nodes: usize },
    /// Importance sampling from sorted iid Gamma draws.
    Importance { samples: usize, seed: u64 },
}

/// Log normalizing constant and its standard error.
pub fn estimate_log_z(params: &ModelParams, method: LogZMethod) -> Result<(f64, f64)> {
    check_evaluable(params)?;
    let f = |l: &[f64]| log_density_raw(params, l);
    match method {
        LogZMethod::Quadrature { nodes } => {
            let upper = sum_upper_bound(params);
            let power = (4.0 / params.kappa()).max(3.0);
            log_z_quadrature(params.n, f, upper, power, nodes)
        }
        LogZMethod::Importance { samples, seed } => {
            // shape κ/2 matches the singularity at zero; the mean per
            // coordinate matches the stationary one
            let shape = params.kappa() / 2.0;
            let rate = params.gamma * params.kappa() / params.alpha;
            let mut rng = crate::stats::rng_streams(seed, 0);
            log_z_importance(params.n, f, shape, rate, samples, &mut rng)
        }
    }
}

/// Upper integration limit for each gap coordinate: far in the tail of the
/// Gamma law of `Σλ`.
fn sum_upper_bound(p: &ModelParams) -> f64 {
    let shape = p.n as f64 * p.alpha / 2.0;
    (shape + 12.0 * shape.sqrt() + 60.0) / p.gamma
}

/// `ln ∫ e^{logf}` over the ordered cone for `n ≤ 3`. The cone is
/// parametrized by `λ¹` and the gaps, each written `upper · s^power` with
/// `s ∈ [0, 1]` to smooth the power singularities at zero. The error is the
/// difference to a rule with half as many nodes.
pub fn log_z_quadrature<F: Fn(&[f64]) -> f64>(
    n: usize,
    logf: F,
    upper: f64,
    power: f64,
    nodes: usize,
) -> Result<(f64, f64)> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidConfig(format!(
            "quadrature supports n <= 3, got {n}"
        )));
    }
    let full = tensor_log_integral(n, &logf, upper, power, nodes)?;
    let half = tensor_log_integral(n, &logf, upper, power, (nodes / 2).max(2))?;
    Ok((full, (full - half).abs()))
}

fn tensor_log_integral<F: Fn(&[f64]) -> f64>(
    n: usize,
    logf: &F,
    upper: f64,
    power: f64,
    nodes: usize,
) -> Result<f64> {
    let rule = GaussLegendre::new(nodes)
        .map_err(|e| Error::InvalidConfig(format!("quadrature nodes: {e}")))?;
    // nodes on [0,1]: (gap value, log of weight × Jacobian)
    let axis: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| {
            let s = 0.5 * (x + 1.0);
            let y = upper * s.powf(power);
            let lj = (0.5 * w).ln() + (upper * power).ln() + (power - 1.0) * s.ln();
            (y, lj)
        })
        .collect();
    let mut acc = LogSumExp::default();
    let mut lam = vec![0.0; n];
    let mut idx = vec![0usize; n];
    loop {
        let mut lw = 0.0;
        let mut run = 0.0;
        for k in 0..n {
            let (y, lj) = axis[idx[k]];
            run += y;
            lam[k] = run;
            lw += lj;
        }
        acc.add(logf(&lam) + lw);
        // odometer
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(acc.value())
}

/// `ln ∫ e^{logf}` over the ordered cone from `samples` sorted draws of
/// `n` iid `Gamma(shape, rate)`; the sorted proposal has density
/// `n! Π g(λⁱ)`.
pub fn log_z_importance<F, R>(
    n: usize,
    logf: F,
    shape: f64,
    rate: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParams(format!("importance proposal: {e}")))?;
    let ln_nfact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    let ln_norm = shape * rate.ln() - ln_gamma(shape);
    let mut lw = Vec::with_capacity(samples);
    let mut l = vec![0.0; n];
    for _ in 0..samples {
        for v in l.iter_mut() {
            *v = g.sample(rng);
        }
        l.sort_unstable_by(f64::total_cmp);
        let lq: f64 = ln_nfact
            + l.iter()
                .map(|&x| ln_norm + (shape - 1.0) * x.ln() - rate * x)
                .sum::<f64>();
        lw.push(logf(&l) - lq);
    }
    let shift = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|v| (v - shift).exp()).collect();
    let (m, se) = mean_stderr(&w);
    Ok((shift + m.ln(), se / m))
}

#[derive(Debug, Default)]
struct LogSumExp {
    max: Option<f64>,
    sum: f64,
}

impl LogSumExp {
    fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        match self.max {
            None => {
                self.max = Some(v);
                self.sum = 1.0;
            }
            Some(m) if v > m => {
                self.sum = self.sum * (m - v).exp() + 1.0;
                self.max = Some(v);
            }
            Some(m) => self.sum += (v - m).exp(),
        }
    }

    fn value(&self) -> f64 {
        self.max.map_or(f64::NEG_INFINITY, |m| m + self.sum.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{gelman_rubin, rng_streams};
    use approx::assert_relative_eq;

    fn p2() -> ModelParams {
        ModelParams::new(2.0, 0.5, 1.0, 2).unwrap()
    }

    #[test]
    fn hand_value() {
        // −½ ln 4 + ¼ ln 4 − 5 + ½ ln 3
        let v = log_density_unnormalized(&p2(), &[1.0, 4.0]).unwrap();
        let want = -0.25 * 4f64.ln() - 5.0 + 0.5 * 3f64.ln();
        assert_relative_eq!(v, want, epsilon = 1e-14);
        assert_relative_eq!(v, -4.797_267_445_945_918, epsilon = 1e-12);
    }

    #[test]
    fn off_cone_is_neg_infinity() {
        for l in [[2.0, 2.0], [4.0, 1.0], [0.0, 1.0]] {
            assert_eq!(
                log_density_unnormalized(&p2(), &l).unwrap(),
                f64::NEG_INFINITY
            );
        }
    }

    #[test]
    fn not_evaluable() {
        let p = ModelParams::new(2.0, 0.5, 0.0, 2).unwrap();
        assert!(matches!(
            log_density_unnormalized(&p, &[1.0, 2.0]),
            Err(Error::NotEvaluable { .. })
        ));
        let p = ModelParams::new(0.5, 0.5, 1.0, 2).unwrap();
        assert!(!StationaryDensity::new(&p).evaluable);
    }

    #[test]
    fn log_z_shift_covariance() {
        let p = p2();
        let f = |l: &[f64]| log_density_raw(&p, l);
        let (a, _) = log_z_quadrature(2, f, 60.0, 3.0, 64).unwrap();
        let (b, _) = log_z_quadrature(2, |l: &[f64]| f(l) + 1.75, 60.0, 3.0, 64).unwrap();
        assert_relative_eq!(b - a, 1.75, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_exact_for_gamma_product() {
        // n = 1 with a Gamma(3, 1) kernel: ∫ x² e^{−x} = 2
        let (v, err) =
            log_z_quadrature(1, |l: &[f64]| 2.0 * l[0].ln() - l[0], 80.0, 3.0, 200).unwrap();
        assert_relative_eq!(v, 2f64.ln(), epsilon = 1e-10);
        assert!(err < 1e-8);
    }

    #[test]
    fn log_z_estimators_agree() {
        for p in [p2(), ModelParams::new(2.0, 0.4, 1.0, 3).unwrap()] {
            let (q, qe) = estimate_log_z(&p, LogZMethod::Quadrature { nodes: 80 }).unwrap();
            let (i, ie) = estimate_log_z(
                &p,
                LogZMethod::Importance {
                    samples: 200_000,
                    seed: 4,
                },
            )
            .unwrap();
            let tol = 3.0 * (qe * qe + ie * ie).sqrt();
            assert!((q - i).abs() <= tol, "n={} quad {q}±{qe} is {i}±{ie}", p.n);
        }
    }

    #[test]
    fn marginal_mass_near_zero_vanishes() {
        // mass of {λ¹ ≤ h} shrinks like h^{κ/2}
        let p = p2();
        let mass = |h: f64| {
            let f = |l: &[f64]| {
                if l[0] <= h {
                    log_density_raw(&p, l)
                } else {
                    f64::NEG_INFINITY
                }
            };
            log_z_quadrature(2, f, h, 4.0, 60).unwrap().0
        };
        let (a, b) = (mass(1e-2), mass(1e-3));
        assert!(a.is_finite() && b.is_finite());
        assert!(b < a);
    }

    #[test]
    fn mh_sum_matches_gamma() {
        let p = p2();
        let mut rng = rng_streams(1, 0);
        let run = mh_sampler(&p, &MhConfig::default(), &mut rng).unwrap();
        assert!(
            (0.15..0.5).contains(&run.acceptance),
            "acceptance {}",
            run.acceptance
        );
        let sums = sorted(run.samples.sums());
        let ks = ks_test(&sums, |x| gamma_cdf(2.0, 1.0, x)).unwrap();
        assert!(ks.p > 0.01, "{ks:?}");
        assert!(run.samples.points.iter().all(|x| x[0] > 0.0 && x[0] < x[1]));
    }

    #[test]
    fn mh_chains_from_distant_starts_mix() {
        let p = p2();
        let chains: Vec<Vec<f64>> = [
            vec![0.01, 0.02],
            vec![8.0, 12.0],
            vec![1.0, 3.0],
            vec![0.3, 6.0],
        ]
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let cfg = MhConfig {
                start: Some(s),
                samples: 2000,
                thin: 5,
                ..MhConfig::default()
            };
            let mut rng = rng_streams(20 + i as u64, 0);
            mh_sampler(&p, &cfg, &mut rng).unwrap().samples.sums()
        })
        .collect();
        let r = gelman_rubin(&chains);
        assert!(r <= 1.05, "R-hat {r}");
    }

    #[test]
    fn mh_matches_rejection_sampling_on_grid() {
        // Rejection sampling from the density restricted to [0, 6]², with a
        // bound from a fine grid search, against a chi-square on a coarse grid.
        let p = p2();
        let f = |l: &[f64]| log_density_raw(&p, l);
        let cap: f64 = 6.0;
        let mut fmax = f64::NEG_INFINITY;
        for i in 1..600 {
            for j in i + 1..600 {
                fmax = fmax.max(f(&[i as f64 * 0.01, j as f64 * 0.01]));
            }
        }
        // λ¹^{−1/4} is unbounded at zero; sample u = (λ¹)^{3/4} instead
        let mut rng = rng_streams(8, 0);
        let mut exact = Vec::new();
        let bound = fmax + 1.0;
        while exact.len() < 10_000 {
            let u: f64 = rng.random::<f64>() * cap.powf(0.75);
            let l1 = u.powf(4.0 / 3.0);
            let l2: f64 = rng.random::<f64>() * cap;
            // density in (u, λ²): f · dλ¹/du = f · (4/3) u^{1/3}
            let v = f(&[l1, l2]) + (4.0f64 / 3.0).ln() + u.ln() / 3.0;
            if rng.random::<f64>().ln() < v - bound {
                exact.push([l1, l2]);
            }
        }
        let mut rng = rng_streams(9, 0);
        let run = mh_sampler(&p, &MhConfig::default(), &mut rng).unwrap();
        let mh: Vec<[f64; 2]> = run
            .samples
            .points
            .iter()
            .filter(|x| x[1] < cap)
            .map(|x| [x[0], x[1]])
            .collect();
        let cell = |x: &[f64; 2]| {
            let a = ((x[0] / 1.0) as usize).min(2);
            let b = ((x[1] / 1.5) as usize).min(3);
            a * 4 + b
        };
        let mut ce = [0f64; 12];
        let mut cm = [0f64; 12];
        exact.iter().for_each(|x| ce[cell(x)] += 1.0);
        mh.iter().for_each(|x| cm[cell(x)] += 1.0);
        let (ne, nm) = (exact.len() as f64, mh.len() as f64);
        let mut stat = 0.0;
        let mut dof = -1.0;
        for k in 0..12 {
            let tot = ce[k] + cm[k];
            if tot < 10.0 {
                continue;
            }
            let ee = tot * ne / (ne + nm);
            let em = tot * nm / (ne + nm);
            stat += (ce[k] - ee).powi(2) / ee + (cm[k] - em).powi(2) / em;
            dof += 1.0;
        }
        let pv = crate::stats::chi_square_sf(stat, dof);
        assert!(pv > 0.001, "chi2 {stat} dof {dof} p {pv}");
    }
}
