//! One- and two-sample Kolmogorov-Smirnov tests with the asymptotic
//! Kolmogorov p-value.

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`ks_test`].
pub const KS_MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_n − F|`
    pub d: f64,
    pub p: f64,
}

/// `D = sup_x |F_n(x) − F(x)|` for sorted `samples`. No size restriction.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .fold(0.0f64, |d, (i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            d.max(above).max(below)
        })
        .min(1.0)
}

/// One-sample KS test of sorted `samples` against `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: KS_MIN_SAMPLES,
        });
    }
    debug_assert!(
        samples.windows(2).all(|w| w[0] <= w[1]),
        "samples must be sorted"
    );
    let d = ks_statistic(samples, cdf);
    Ok(KsResult {
        d,
        p: kolmogorov_pvalue(d, samples.len() as f64),
    })
}

/// Two-sample KS test; both inputs must be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: s.len(),
                need: KS_MIN_SAMPLES,
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(KsResult {
        d,
        p: kolmogorov_pvalue(d, ne),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 0..20 {
            let m = (2 * k + 1) as f64;
            s += (-m * m * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += sign * term;
            if term < 1e-18 {
                break;
            }
            sign = -sign;
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' finite-size correction of the scaling.
pub fn kolmogorov_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}
