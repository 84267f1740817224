//! Exact scalar CIR machinery, `dr = (a − b r) dt + σ √r dW`.
//!
//! The sum of all coordinates of the particle system is such a process with
//! `a = nα`, `b = 2γ`, `σ = 2`; everything here serves as ground truth for
//! the particle simulations.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stats::gamma_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirState {
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirBoundary {
    NeverHitsZero,
    HitsZeroAlmostSurely,
    HitsZeroProbInZeroOne,
}

impl CirParams {
    pub fn new(a: f64, b: f64, sigma: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParams(format!("CIR a must be >= 0, got {a}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "CIR sigma must be > 0, got {sigma}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::InvalidParams("CIR b must be finite".into()));
        }
        Ok(Self { a, b, sigma })
    }

    /// The CIR law followed by `λ¹ + ... + λⁿ`.
    pub fn sum_process(params: &ModelParams) -> Self {
        Self {
            a: params.n as f64 * params.alpha,
            b: 2.0 * params.gamma,
            sigma: 2.0,
        }
    }

    /// The law of a single coordinate with no interaction (`n = 1`).
    pub fn single_particle(alpha: f64, gamma: f64) -> Self {
        Self {
            a: alpha,
            b: 2.0 * gamma,
            sigma: 2.0,
        }
    }
}

/// `(1 − e^{−b·dt}) / b`, continuous at `b = 0`.
#[inline]
fn one_minus_exp_over(b: f64, dt: f64) -> f64 {
    if b == 0.0 {
        dt
    } else {
        -(-b * dt).exp_m1() / b
    }
}

pub fn cir_boundary_classification(cir: &CirParams) -> CirBoundary {
    if cir.a >= cir.sigma * cir.sigma / 2.0 {
        CirBoundary::NeverHitsZero
    } else if cir.b >= 0.0 {
        CirBoundary::HitsZeroAlmostSurely
    } else {
        CirBoundary::HitsZeroProbInZeroOne
    }
}

/// `E[r_{t+dt} | r_t]`.
pub fn cir_conditional_mean(cir: &CirParams, r_t: f64, dt: f64) -> f64 {
    if dt.is_infinite() {
        return if cir.b > 0.0 {
            cir.a / cir.b
        } else {
            f64::INFINITY
        };
    }
    r_t * (-cir.b * dt).exp() + cir.a * one_minus_exp_over(cir.b, dt)
}

/// Scale, degrees of freedom and noncentrality of the transition:
/// `r_{t+dt} = c · χ'²_d(ν)`.
fn transition_law(cir: &CirParams, r: f64, dt: f64) -> (f64, f64, f64) {
    let c = cir.sigma * cir.sigma * one_minus_exp_over(cir.b, dt) / 4.0;
    let d = 4.0 * cir.a / (cir.sigma * cir.sigma);
    let nu = r * (-cir.b * dt).exp() / c;
    (c, d, nu)
}

/// Below this Poisson mean the mixture index is taken to be zero.
const CENTRAL_BRANCH_CUTOFF: f64 = 1e-12;

/// One draw from the exact transition law of the CIR process, via the
/// Poisson mixture of Gamma laws representing the noncentral chi-square.
pub fn cir_exact_step<R: Rng + ?Sized>(
    cir: &CirParams,
    r: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::DomainError(format!("dt must be > 0, got {dt}")));
    }
    let (c, d, nu) = transition_law(cir, r.max(0.0), dt);
    let half_nu = nu / 2.0;
    let mix = if half_nu > CENTRAL_BRANCH_CUTOFF {
        Poisson::new(half_nu)
            .map_err(|e| Error::RngFailure(e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    let shape = d / 2.0 + mix;
    if shape <= 0.0 {
        return Ok(0.0);
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::RngFailure(e.to_string()))?;
    Ok(2.0 * c * g.sample(rng))
}

/// CDF of the exact transition law at `x`.
pub fn cir_transition_cdf(cir: &CirParams, r: f64, dt: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (c, d, nu) = transition_law(cir, r.max(0.0), dt);
    let m = nu / 2.0;
    let y = x / (2.0 * c);
    if m <= CENTRAL_BRANCH_CUTOFF {
        return if d > 0.0 {
            gamma_cdf(d / 2.0, 1.0, y)
        } else {
            1.0
        };
    }
    // Poisson weights summed outward from the mode.
    let spread = (10.0 * m.sqrt()).max(30.0);
    let lo = (m - spread).max(0.0).floor() as u64;
    let hi = (m + spread).ceil() as u64;
    let ln_m = m.ln();
    let mut total = 0.0;
    for k in lo..=hi {
        let kf = k as f64;
        let w = (kf * ln_m - m - crate::stats::ln_gamma(kf + 1.0)).exp();
        let shape = d / 2.0 + kf;
        let f = if shape <= 0.0 {
            1.0
        } else {
            gamma_cdf(shape, 1.0, y)
        };
        total += w * f;
    }
    total.clamp(0.0, 1.0)
}

/// Shape and rate of the invariant Gamma law, `(2a/σ², 2b/σ²)`.
pub fn cir_invariant_gamma(cir: &CirParams) -> Result<(f64, f64)> {
    if !(cir.b > 0.0) {
        return Err(Error::NoInvariantLaw { b: cir.b });
    }
    let s2 = cir.sigma * cir.sigma;
    Ok((2.0 * cir.a / s2, 2.0 * cir.b / s2))
}

/// Closed-form Laplace transform `E[exp(−μ ∫₀ᵗ rₛ ds)]` of the integrated
/// sum process `dr = 2√r dW + (nα − 2γr) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    pub mu: f64,
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    pub value: f64,
}

/// `(φ_μ(t), ψ_μ(t))` for mean reversion `γ`.
///
/// With `s = √(γ² + 2μ)`:
///
/// ```text
/// φ = −½ ln( 2s e^{(γ−s)t} / ((s−γ) e^{−2ts} + s + γ) )
/// ψ = μ (1 − e^{−2ts}) / ((s−γ) e^{−2ts} + s + γ)
/// ```
///
/// Both are written with the decaying exponential only, so no term can
/// overflow for large `t·s`; `t = ∞` gives the limits `(∞, μ/(s+γ))`.
pub fn laplace_phi_psi(gamma: f64, mu: f64, t: f64) -> (f64, f64) {
    if mu == 0.0 {
        return (0.0, 0.0);
    }
    let s = (gamma * gamma + 2.0 * mu).sqrt();
    if t.is_infinite() {
        return (f64::INFINITY, mu / (s + gamma));
    }
    let decay = (-2.0 * t * s).exp();
    let denom = (s - gamma) * decay + s + gamma;
    let phi = -0.5 * ((2.0 * s).ln() + (gamma - s) * t - denom.ln());
    // (1 − e^{−2ts}) via expm1 keeps small-t accuracy
    let psi = mu * (-(-2.0 * t * s).exp_m1()) / denom;
    (phi, psi)
}

/// Multiplier of `φ_μ` in the exponent: the constant drift `nα` of the sum
/// process (this equals `2α` only when `n = 2`).
pub fn laplace_prefactor(params: &ModelParams) -> f64 {
    params.n as f64 * params.alpha
}

pub fn integrated_cir_laplace(
    params: &ModelParams,
    sum0: f64,
    mu: f64,
    t: f64,
) -> Result<LaplaceQuery> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::DomainError(format!(
            "mu must be finite and >= 0, got {mu}"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("t must be > 0, got {t}")));
    }
    if !(sum0 >= 0.0) {
        return Err(Error::DomainError(format!(
            "initial sum must be >= 0, got {sum0}"
        )));
    }
    let (phi, psi) = laplace_phi_psi(params.gamma, mu, t);
    let c = laplace_prefactor(params);
    let log_value = if phi.is_infinite() {
        if c > 0.0 {
            f64::NEG_INFINITY
        } else {
            -sum0 * psi
        }
    } else {
        -c * phi - sum0 * psi
    };
    if log_value.is_nan() {
        return Err(Error::NumericOverflow(format!(
            "Laplace exponent undefined at mu = {mu}, t = {t}"
        )));
    }
    Ok(LaplaceQuery {
        mu,
        t,
        phi,
        psi,
        value: log_value.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean_stderr, rng_streams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Transition variance from the moment ODEs of the SDE:
    /// d/dt E r = a − b E r,  d/dt E r² = (2a + σ²) E r − 2b E r².
    fn variance_from_moment_odes(cir: &CirParams, r0: f64, t: f64) -> f64 {
        let (a, b, s2) = (cir.a, cir.b, cir.sigma * cir.sigma);
        let steps = 200_000;
        let h = t / steps as f64;
        let f = |m1: f64, m2: f64| (a - b * m1, (2.0 * a + s2) * m1 - 2.0 * b * m2);
        let (mut m1, mut m2) = (r0, r0 * r0);
        for _ in 0..steps {
            let (k1a, k1b) = f(m1, m2);
            let (k2a, k2b) = f(m1 + 0.5 * h * k1a, m2 + 0.5 * h * k1b);
            let (k3a, k3b) = f(m1 + 0.5 * h * k2a, m2 + 0.5 * h * k2b);
            let (k4a, k4b) = f(m1 + h * k3a, m2 + h * k3b);
            m1 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            m2 += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }
        m2 - m1 * m1
    }

    #[test]
    fn boundary_examples() {
        let c = |a, b, s| CirParams::new(a, b, s).unwrap();
        assert_eq!(
            cir_boundary_classification(&c(2.0, 0.0, 2.0)),
            CirBoundary::NeverHitsZero
        );
        assert_eq!(
            cir_boundary_classification(&c(1.0, 1.0, 2.0)),
            CirBoundary::HitsZeroAlmostSurely
        );
        assert_eq!(
            cir_boundary_classification(&c(1.0, -1.0, 2.0)),
            CirBoundary::HitsZeroProbInZeroOne
        );
    }

    proptest! {
        #[test]
        fn boundary_partition(a in 0.0f64..5.0, b in -3.0f64..3.0, sigma in 0.1f64..3.0) {
            let cir = CirParams::new(a, b, sigma).unwrap();
            let got = cir_boundary_classification(&cir);
            let feller = a >= sigma * sigma / 2.0;
            let expect = match (feller, b >= 0.0) {
                (true, _) => CirBoundary::NeverHitsZero,
                (false, true) => CirBoundary::HitsZeroAlmostSurely,
                (false, false) => CirBoundary::HitsZeroProbInZeroOne,
            };
            prop_assert_eq!(got, expect);
        }

        #[test]
        fn laplace_in_unit_interval_and_monotone(
            gamma in -1.0f64..2.0, mu in 0.01f64..3.0, t in 0.05f64..5.0, s0 in 0.0f64..5.0,
        ) {
            let p = ModelParams::new(1.3, 0.4, gamma, 3).unwrap();
            let v = integrated_cir_laplace(&p, s0, mu, t).unwrap().value;
            prop_assert!(v > 0.0 && v <= 1.0);
            let v_mu = integrated_cir_laplace(&p, s0, mu * 1.5, t).unwrap().value;
            let v_t = integrated_cir_laplace(&p, s0, mu, t * 1.5).unwrap().value;
            prop_assert!(v_mu < v);
            prop_assert!(v_t < v);
        }
    }

    #[test]
    fn conditional_mean_examples() {
        let c = CirParams::new(2.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(
            cir_conditional_mean(&c, 1.0, 2f64.ln()),
            1.5,
            epsilon = 1e-14
        );
        let c = CirParams::new(2.0, 0.0, 2.0).unwrap();
        assert_eq!(cir_conditional_mean(&c, 1.0, 1.0), 3.0);
        let c = CirParams::new(0.0, 2.0, 2.0).unwrap();
        assert_eq!(cir_conditional_mean(&c, 5.0, f64::INFINITY), 0.0);
        assert!(cir_conditional_mean(&c, 5.0, 50.0) < 1e-40);
    }

    #[test]
    fn exact_step_moments() {
        let c = CirParams::new(2.0, 1.0, 2.0).unwrap();
        let dt = 2f64.ln();
        let mut rng = rng_streams(2024, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| cir_exact_step(&c, 1.0, dt, &mut rng).unwrap())
            .collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let (mean, se) = mean_stderr(&xs);
        assert!((mean - 1.5).abs() < 4.0 * se, "mean {mean} se {se}");

        let var_true = variance_from_moment_odes(&c, 1.0, dt);
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var_se = ((m4 - var * var) / n).sqrt();
        assert!(
            (var - var_true).abs() < 5.0 * var_se,
            "var {var} vs {var_true} (se {var_se})"
        );
    }

    #[test]
    fn exact_step_moments_hitting_regime() {
        // a < σ²/2 with a small start: exercises the Poisson mixture near zero.
        let c = CirParams::new(0.5, 0.7, 1.5).unwrap();
        let dt = 0.3;
        let mut rng = rng_streams(2025, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| cir_exact_step(&c, 0.05, dt, &mut rng).unwrap())
            .collect();
        let (mean, se) = mean_stderr(&xs);
        assert!((mean - cir_conditional_mean(&c, 0.05, dt)).abs() < 4.0 * se);
        let var_true = variance_from_moment_odes(&c, 0.05, dt);
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        assert!((var - var_true).abs() < 5.0 * ((m4 - var * var) / n).sqrt());
    }

    #[test]
    fn absorbed_at_zero() {
        let c = CirParams::new(0.0, 1.0, 2.0).unwrap();
        let mut rng = rng_streams(1, 1);
        for _ in 0..100 {
            assert_eq!(cir_exact_step(&c, 0.0, 0.1, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn transition_cdf_matches_samples() {
        let c = CirParams::new(6.0, 2.0, 2.0).unwrap();
        let mut rng = rng_streams(3, 0);
        let mut xs: Vec<f64> = (0..20_000)
            .map(|_| cir_exact_step(&c, 3.5, 1.0, &mut rng).unwrap())
            .collect();
        xs.sort_by(f64::total_cmp);
        let r = crate::stats::ks_test(&xs, |x| cir_transition_cdf(&c, 3.5, 1.0, x)).unwrap();
        assert!(r.p > 0.01, "{r:?}");
    }

    #[test]
    fn invariant_gamma_examples() {
        let c = CirParams::new(4.0, 2.0, 2.0).unwrap();
        assert_eq!(cir_invariant_gamma(&c).unwrap(), (2.0, 1.0));
        let c = CirParams::new(2.0, 2.0, 2.0).unwrap();
        assert_eq!(cir_invariant_gamma(&c).unwrap(), (1.0, 1.0));
        let c = CirParams::new(3.0, -1.0, 2.0).unwrap();
        assert_eq!(
            cir_invariant_gamma(&c),
            Err(Error::NoInvariantLaw { b: -1.0 })
        );
        // sum process of (n=2, α=2, γ=1)
        let p = ModelParams::new(2.0, 0.5, 1.0, 2).unwrap();
        assert_eq!(
            cir_invariant_gamma(&CirParams::sum_process(&p)).unwrap(),
            (2.0, 1.0)
        );
    }

    #[test]
    fn laplace_trivial_and_limits() {
        let p = ModelParams::new(1.0, 0.5, 1.0, 2).unwrap();
        let q = integrated_cir_laplace(&p, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(q.value, 1.0);
        let q = integrated_cir_laplace(&p, 1.0, 1.0, 1e3).unwrap();
        let limit = 1.0 / (3f64.sqrt() + 1.0);
        assert!((q.psi - limit).abs() < 1e-9);
        assert!(q.value > 0.0 || q.phi > 700.0);
        let q = integrated_cir_laplace(&p, 1.0, 1.0, f64::INFINITY).unwrap();
        assert_eq!(q.value, 0.0);
        assert!((q.psi - limit).abs() < 1e-15);
        // huge exponent: no overflow
        let q = integrated_cir_laplace(&p, 1.0, 50.0, 1e6).unwrap();
        assert!(q.phi.is_finite() && q.psi.is_finite());
    }

    /// φ and ψ solve ψ' = μ − 2γψ − 2ψ², φ' = ψ with zero initial values.
    #[test]
    fn laplace_terms_solve_riccati() {
        for &(gamma, mu) in &[(1.0, 0.5), (0.0, 1.0), (-0.7, 0.3), (2.0, 2.0)] {
            let t_end = 2.0;
            let steps = 20_000;
            let h = t_end / steps as f64;
            let rhs = |psi: f64| mu - 2.0 * gamma * psi - 2.0 * psi * psi;
            let (mut psi, mut phi) = (0.0f64, 0.0f64);
            for _ in 0..steps {
                let k1 = rhs(psi);
                let k2 = rhs(psi + 0.5 * h * k1);
                let k3 = rhs(psi + 0.5 * h * k2);
                let k4 = rhs(psi + h * k3);
                let p1 = psi;
                let p2 = psi + 0.5 * h * k1;
                let p3 = psi + 0.5 * h * k2;
                let p4 = psi + h * k3;
                phi += h / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
                psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            let (phi_cf, psi_cf) = laplace_phi_psi(gamma, mu, t_end);
            assert!((psi - psi_cf).abs() < 1e-9, "psi {psi} vs {psi_cf}");
            assert!((phi - phi_cf).abs() < 1e-6, "phi {phi} vs {phi_cf}");
        }
    }
}
