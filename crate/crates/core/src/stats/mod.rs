//! Verification utilities: KS tests, moment summaries with confidence
//! intervals, empirical Laplace transforms, finite-difference gradients and
//! the random-stream plumbing.

mod ks;
pub mod rng;

pub use ks::{
    kolmogorov_pvalue, kolmogorov_sf, ks_statistic, ks_test, ks_two_sample, KsResult,
    KS_MIN_SAMPLES,
};
pub use rng::{rng_in_domain, rng_streams, StreamRng};

use crate::error::{Error, Result};
use statrs::function::{erf, gamma};

/// 97.5% standard normal quantile.
pub const Z975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct StatSummary {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub ks_d: Option<f64>,
    pub ks_p: Option<f64>,
    pub n_samples: usize,
}

impl StatSummary {
    /// Sample mean with a normal-approximation interval.
    pub fn mean_of(name: impl Into<String>, xs: &[f64]) -> Self {
        let (mean, se) = mean_stderr(xs);
        Self {
            name: name.into(),
            estimate: mean,
            stderr: se,
            ci95: (mean - Z975 * se, mean + Z975 * se),
            ks_d: None,
            ks_p: None,
            n_samples: xs.len(),
        }
    }

    /// Binomial proportion with a Wilson score interval.
    pub fn proportion(name: impl Into<String>, hits: usize, n: usize) -> Self {
        let nf = n.max(1) as f64;
        let p = hits as f64 / nf;
        let (lo, hi) = wilson_interval(hits, n);
        Self {
            name: name.into(),
            estimate: p,
            stderr: (p * (1.0 - p) / nf).sqrt(),
            ci95: (lo, hi),
            ks_d: None,
            ks_p: None,
            n_samples: n,
        }
    }

    pub fn with_ks(mut self, ks: KsResult) -> Self {
        self.ks_d = Some(ks.d);
        self.ks_p = Some(ks.p);
        self
    }

    /// Summary carrying only a KS result; the estimate is the distance.
    pub fn from_ks(name: impl Into<String>, ks: KsResult, n_samples: usize) -> Self {
        Self {
            name: name.into(),
            estimate: ks.d,
            stderr: 0.0,
            ci95: (ks.d, ks.d),
            ks_d: Some(ks.d),
            ks_p: Some(ks.p),
            n_samples,
        }
    }
}

/// Mean and standard error (sample standard deviation over `√N`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z975 * Z975;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z975 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // rounding can push the bounds past p at 0 or n hits
    (
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    )
}

/// Mean of `exp(−μ·s)` over nonnegative samples.
pub fn empirical_laplace(integral_samples: &[f64], mu: f64) -> StatSummary {
    let vals: Vec<f64> = integral_samples.iter().map(|&s| (-mu * s).exp()).collect();
    let mut s = StatSummary::mean_of(format!("laplace_mu{mu}"), &vals);
    if mu == 0.0 {
        s.stderr = 0.0;
        s.ci95 = (1.0, 1.0);
    }
    s
}

/// Central differences `(f(x+heᵢ) − f(x−heᵢ)) / 2h`.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe).map_err(into_domain)?;
        probe[i] = x[i] - h;
        let fm = f(&probe).map_err(into_domain)?;
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

fn into_domain(e: Error) -> Error {
    match e {
        Error::DomainError(_) => e,
        other => Error::DomainError(other.to_string()),
    }
}

/// Potential scale reduction factor over equal-length chains.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains.iter().map(Vec::len).min().unwrap_or(0) as f64;
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c[..n as usize].iter().sum::<f64>() / n)
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| {
            c[..n as usize]
                .iter()
                .map(|x| (x - mu).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        })
        .sum::<f64>()
        / m;
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Chi-square goodness-of-fit p-value of `values` in `[0,1]` against the
/// uniform law on `bins` equal cells.
pub fn uniformity_pvalue(values: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    chi_square_sf(stat, (bins - 1) as f64)
}

pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(dof / 2.0, x / 2.0)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of `Gamma(shape, rate)`.
pub fn gamma_cdf(shape: f64, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma::gamma_lr(shape, rate * x)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn laplace_examples() {
        let s = empirical_laplace(&[1.0, 2.0, 3.0], 0.0);
        assert_eq!(s.estimate, 1.0);
        assert_eq!(s.stderr, 0.0);
        let s = empirical_laplace(&[0.0, 2f64.ln()], 1.0);
        assert_relative_eq!(s.estimate, 0.75, epsilon = 1e-15);
        let s = empirical_laplace(&[0.0, 0.5, 1e6], 3.0);
        assert!(s.estimate > 0.0 && s.estimate <= 1.0);
    }

    #[test]
    fn fd_quadratic_exact() {
        let g =
            finite_diff_gradient(|x| Ok(x.iter().map(|v| v * v).sum()), &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn fd_error_is_second_order() {
        // f = sin(x0) e^{x1}: third derivatives nonzero, so the error ~ h².
        let f = |x: &[f64]| Ok(x[0].sin() * x[1].exp());
        let x = [0.7, 0.3];
        let exact = 0.7f64.cos() * 0.3f64.exp();
        let err = |h: f64| (finite_diff_gradient(f, &x, h).unwrap()[0] - exact).abs();
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        for r in [e1 / e2, e2 / e3] {
            assert!((3.5..4.5).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn fd_propagates_domain_errors() {
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                Err(Error::DomainError("neg".into()))
            } else {
                Ok(x[0].ln())
            }
        };
        assert!(matches!(
            finite_diff_gradient(f, &[1e-6], 1e-5),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 10), (10, 10), (3, 17), (990, 1000)] {
            let s = StatSummary::proportion("p", h, n);
            assert!(s.ci95.0 <= s.estimate && s.estimate <= s.ci95.1);
        }
    }

    #[test]
    fn gamma_cdf_matches_exponential() {
        for x in [0.1, 1.0, 3.0] {
            assert_relative_eq!(
                gamma_cdf(1.0, 2.0, x),
                1.0 - (-2.0 * x).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn ks_pvalues_uniform_under_null() {
        let mut rng = rng_streams(99, 0);
        let pvals: Vec<f64> = (0..200)
            .map(|_| {
                let xs = sorted((0..200).map(|_| rng.random::<f64>()).collect());
                ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap().p
            })
            .collect();
        let p = uniformity_pvalue(&pvals, 10);
        assert!(p > 0.01, "calibration p = {p}");
    }

    #[test]
    fn gelman_rubin_near_one_for_iid() {
        let mut rng = rng_streams(5, 1);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2000).map(|_| rng.random::<f64>()).collect())
            .collect();
        assert!(gelman_rubin(&chains) < 1.01);
        let shifted = vec![
            chains[0].clone(),
            chains[1].iter().map(|x| x + 5.0).collect(),
        ];
        assert!(gelman_rubin(&shifted) > 2.0);
    }
}
