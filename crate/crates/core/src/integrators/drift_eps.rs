//! Regularized drift fields used by the switching scheme, plus the guarded
//! variants of all drifts used inside the time steppers.

use crate::error::{Error, Result};
use crate::model::{check_distinct, ModelParams};

/// Denominator with magnitude floored at `g`. Zero takes the sign implied by
/// index order (`i < j` means `λⁱ ≤ λʲ`). With `g = 0` this is the identity.
#[inline]
pub(crate) fn capped(d: f64, g: f64, i_before_j: bool) -> f64 {
    if d.abs() >= g && d != 0.0 {
        d
    } else if d > 0.0 || (d == 0.0 && !i_before_j) {
        g
    } else {
        -g
    }
}

/// `0 ∨ (2√2/√ε)(√λ − √ε/(2√2)) ∧ 1`: zero below `ε/8`, one above `ε/2`.
#[inline]
pub fn clamp_a(epsilon: f64, lambda: f64) -> f64 {
    let r = 2.0 * std::f64::consts::SQRT_2 / epsilon.sqrt();
    (r * (lambda.sqrt() - 1.0 / r)).clamp(0.0, 1.0)
}

/// `0 ∨ (2/√ε)(√λ − √ε/2) ∧ 1`: zero below `ε/4`, one above `ε`.
#[inline]
pub fn clamp_b(epsilon: f64, lambda: f64) -> f64 {
    let se = epsilon.sqrt();
    (2.0 / se * (lambda.sqrt() - se / 2.0)).clamp(0.0, 1.0)
}

/// Symmetric drift with interaction denominators floored at `g`.
/// Each capped pair term enters both coordinates with opposite signs, so the
/// sum of the drift is unaffected by the guard.
pub(crate) fn drift_lambda_guarded(p: &ModelParams, lam: &[f64], g: f64, out: &mut [f64]) {
    let n = lam.len();
    for i in 0..n {
        out[i] = p.alpha - 2.0 * p.gamma * lam[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            let t = p.beta * (lam[i] + lam[j]) / capped(lam[i] - lam[j], g, true);
            out[i] += t;
            out[j] -= t;
        }
    }
}

fn a_eps_into(p: &ModelParams, eps: f64, lam: &[f64], g: f64, out: &mut [f64]) {
    let n = lam.len();
    let kappa = p.kappa();
    for i in 0..n {
        // κ + (1 − clamp) so a saturated clamp contributes exactly nothing
        out[i] = kappa + (1.0 - clamp_a(eps, lam[i])) - 2.0 * p.gamma * lam[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = capped(lam[i] - lam[j], g, true);
            out[i] += 2.0 * p.beta * lam[i] / d;
            out[j] -= 2.0 * p.beta * lam[j] / d;
        }
    }
}

fn b_eps_into(p: &ModelParams, eps: f64, lam: &[f64], g: f64, out: &mut [f64]) {
    let n = lam.len();
    let kappa = p.kappa();
    let m = lam[0].min(eps);
    let mut first = kappa - 2.0 * p.gamma * lam[0];
    for &lj in &lam[1..] {
        first -= 2.0 * p.beta * m / (lj - m).max(eps);
    }
    out[0] = first;
    for i in 1..n {
        out[i] = kappa + (1.0 - clamp_b(eps, lam[i])) - 2.0 * p.gamma * lam[i]
            + 2.0 * p.beta * lam[i] / (lam[i] - m).max(eps);
    }
    for i in 1..n {
        for j in i + 1..n {
            let d = capped(lam[i] - lam[j], g, true);
            out[i] += 2.0 * p.beta * lam[i] / d;
            out[j] -= 2.0 * p.beta * lam[j] / d;
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be > 0, got {eps}"
        )));
    }
    Ok(())
}

/// Drift of the system regularized at the zero boundary:
///
/// ```text
/// κ + 1 − [0 ∨ (2√2/√ε)(√λⁱ − √ε/(2√2)) ∧ 1] − 2γλⁱ + 2βλⁱ Σ_{j≠i} 1/(λⁱ−λʲ)
/// ```
///
/// Equal to the unregularized drift wherever `λ¹ ≥ ε/2`.
pub fn drift_a_eps(params: &ModelParams, epsilon: f64, lambda: &[f64]) -> Result<Vec<f64>> {
    params.check_dim(lambda.len())?;
    check_eps(epsilon)?;
    check_distinct(lambda)?;
    let mut out = vec![0.0; lambda.len()];
    a_eps_into(params, epsilon, lambda, 0.0, &mut out);
    Ok(out)
}

/// Drift of the system regularized at the first gap. Coordinate 1:
///
/// ```text
/// κ − 2γλ¹ − 2β Σ_{j≠1} (λ¹∧ε) / ((λʲ − λ¹∧ε) ∨ ε)
/// ```
///
/// and for `i ≥ 2`:
///
/// ```text
/// κ + 1 − 2γλⁱ + 2β Σ_{j≥2, j≠i} λⁱ/(λⁱ−λʲ)
///   − [0 ∨ (2/√ε)(√λⁱ − √ε/2) ∧ 1] + 2βλⁱ / ((λⁱ − λ¹∧ε) ∨ ε)
/// ```
///
/// Equal to the unregularized drift where `λ¹ ≤ ε` and `λ²−λ¹ ≥ ε`.
pub fn drift_b_eps(params: &ModelParams, epsilon: f64, lambda: &[f64]) -> Result<Vec<f64>> {
    params.check_dim(lambda.len())?;
    check_eps(epsilon)?;
    check_distinct(&lambda[1..]).map_err(|e| match e {
        Error::CoincidentCoordinates { i, j } => {
            Error::CoincidentCoordinates { i: i + 1, j: j + 1 }
        }
        e => e,
    })?;
    if !(lambda[0] >= 0.0) {
        return Err(Error::DomainError(format!(
            "λ¹ = {} is negative",
            lambda[0]
        )));
    }
    let mut out = vec![0.0; lambda.len()];
    b_eps_into(params, epsilon, lambda, 0.0, &mut out);
    Ok(out)
}

pub(crate) fn drift_a_eps_guarded(p: &ModelParams, eps: f64, lam: &[f64], g: f64, out: &mut [f64]) {
    a_eps_into(p, eps, lam, g, out)
}

pub(crate) fn drift_b_eps_guarded(p: &ModelParams, eps: f64, lam: &[f64], g: f64, out: &mut [f64]) {
    b_eps_into(p, eps, lam, g, out)
}

/// Drift of the square-root coordinates with the zero singularity replaced
/// by `1/(x ∨ floor)`:
///
/// ```text
/// ((κ−1)/2) / (xⁱ ∨ floor) − γxⁱ + βxⁱ Σ_{j≠i} 1/((xⁱ)² − (xʲ)²)
/// ```
///
/// The square differences are floored at `g`.
pub(crate) fn drift_root_guarded(p: &ModelParams, x: &[f64], floor: f64, g: f64, out: &mut [f64]) {
    let n = x.len();
    let c = (p.kappa() - 1.0) / 2.0;
    for i in 0..n {
        out[i] = c / x[i].max(floor) - p.gamma * x[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = capped(x[i] * x[i] - x[j] * x[j], g, true);
            out[i] += p.beta * x[i] / d;
            out[j] -= p.beta * x[j] / d;
        }
    }
}
