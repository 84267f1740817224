use super::ModelParams;
use crate::error::{Error, Result};

pub(crate) fn check_distinct(v: &[f64]) -> Result<()> {
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] == v[j] {
                return Err(Error::CoincidentCoordinates { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(())
}

/// Drift of the eigenvalue system in its symmetric form,
/// `α − 2γλⁱ + β Σ_{j≠i} (λⁱ+λʲ)/(λⁱ−λʲ)`.
pub fn drift_lambda(params: &ModelParams, lambda: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; lambda.len()];
    drift_lambda_into(params, lambda, &mut out)?;
    Ok(out)
}

pub fn drift_lambda_into(params: &ModelParams, lambda: &[f64], out: &mut [f64]) -> Result<()> {
    params.check_dim(lambda.len())?;
    check_distinct(lambda)?;
    let ModelParams {
        alpha, beta, gamma, ..
    } = *params;
    for (i, &li) in lambda.iter().enumerate() {
        let mut inter = 0.0;
        for (j, &lj) in lambda.iter().enumerate() {
            if j != i {
                inter += (li + lj) / (li - lj);
            }
        }
        out[i] = alpha - 2.0 * gamma * li + beta * inter;
    }
    Ok(())
}

/// Same drift written as `κ − 2γλⁱ + 2βλⁱ Σ_{j≠i} 1/(λⁱ−λʲ)`.
pub fn drift_lambda_dual(params: &ModelParams, lambda: &[f64]) -> Result<Vec<f64>> {
    params.check_dim(lambda.len())?;
    check_distinct(lambda)?;
    let kappa = params.kappa();
    Ok(lambda
        .iter()
        .enumerate()
        .map(|(i, &li)| {
            let inv: f64 = lambda
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &lj)| 1.0 / (li - lj))
                .sum();
            kappa - 2.0 * params.gamma * li + 2.0 * params.beta * li * inv
        })
        .collect())
}

/// Drift of the square-root coordinates `xⁱ = √λⁱ`:
/// `(α−1)/(2xⁱ) − γxⁱ + β/(2xⁱ) Σ_{j≠i} ((xⁱ)²+(xʲ)²)/((xⁱ)²−(xʲ)²)`.
pub fn drift_root(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    params.check_dim(x.len())?;
    if let Some(i) = x.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroCoordinate { i: i + 1 });
    }
    check_distinct(x)?;
    let ModelParams {
        alpha, beta, gamma, ..
    } = *params;
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let xi2 = xi * xi;
            let mut inter = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                if j != i {
                    let xj2 = xj * xj;
                    inter += (xi2 + xj2) / (xi2 - xj2);
                }
            }
            (alpha - 1.0) / (2.0 * xi) - gamma * xi + beta / (2.0 * xi) * inter
        })
        .collect())
}

fn check_open_cone(x: &[f64]) -> Result<()> {
    if !(x.first().copied().unwrap_or(1.0) > 0.0) {
        return Err(Error::DomainError("x¹ must be > 0".into()));
    }
    if let Some(i) = x.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::DomainError(format!(
            "x{} < x{} violated",
            i + 1,
            i + 2
        )));
    }
    Ok(())
}

/// Potential `V` with `dx = dB − ∇V(x) dt`:
///
/// ```text
/// V(x) = −Σᵢ { (κ−1)/2 ln xⁱ − γ(xⁱ)²/2 + β/4 Σ_{j≠i} (ln|xⁱ−xʲ| + ln|xⁱ+xʲ|) }
/// ```
///
/// Defined on the open ordered cone `0 < x¹ < ... < xⁿ`.
pub fn potential_v(params: &ModelParams, x: &[f64]) -> Result<f64> {
    params.check_dim(x.len())?;
    check_open_cone(x)?;
    let c = (params.kappa() - 1.0) / 2.0;
    let mut acc = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let mut pair = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            if j != i {
                pair += (xi - xj).abs().ln() + (xi + xj).abs().ln();
            }
        }
        acc += c * xi.ln() - 0.5 * params.gamma * xi * xi + 0.25 * params.beta * pair;
    }
    Ok(-acc)
}

/// Gradient of [`potential_v`], evaluated from the partial fractions
/// `1/(xⁱ−xʲ) + 1/(xⁱ+xʲ) = 2xⁱ/((xⁱ)²−(xʲ)²)`.
pub fn grad_v(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    params.check_dim(x.len())?;
    check_open_cone(x)?;
    let c = (params.kappa() - 1.0) / 2.0;
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let inter: f64 = x
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| 1.0 / (xi * xi - xj * xj))
                .sum();
            -(c / xi - params.gamma * xi + params.beta * xi * inter)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64, gamma: f64, n: usize) -> ModelParams {
        ModelParams::new(alpha, beta, gamma, n).unwrap()
    }

    #[test]
    fn drift_lambda_hand_values() {
        let d = drift_lambda(&p(2.0, 0.5, 0.0, 2), &[1.0, 3.0]).unwrap();
        assert_eq!(d, vec![1.0, 3.0]);
        let d = drift_lambda(&p(2.0, 0.5, 1.0, 2), &[1.0, 3.0]).unwrap();
        assert_eq!(d, vec![-1.0, -3.0]);
    }

    #[test]
    fn drift_lambda_dual_hand_values() {
        let d = drift_lambda_dual(&p(2.0, 0.5, 0.0, 2), &[1.0, 3.0]).unwrap();
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(d[1], 3.0, epsilon = 1e-15);
        let d = drift_lambda_dual(&p(1.5, 0.4, 0.0, 3), &[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(d.iter().sum::<f64>(), 4.5, epsilon = 1e-14);
        // κ = 0 exactly
        let d = drift_lambda_dual(&p(0.5, 0.5, 0.0, 2), &[1.0, 3.0]).unwrap();
        assert_relative_eq!(d[0], -0.5, epsilon = 1e-15);
        assert_relative_eq!(d[1], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn coincident_and_zero_errors() {
        let q = p(2.0, 0.5, 0.0, 3);
        assert_eq!(
            drift_lambda(&q, &[1.0, 2.0, 2.0]),
            Err(Error::CoincidentCoordinates { i: 2, j: 3 })
        );
        assert!(drift_lambda_dual(&q, &[1.0, 1.0, 2.0]).is_err());
        assert_eq!(
            drift_root(&q, &[0.0, 1.0, 2.0]),
            Err(Error::ZeroCoordinate { i: 1 })
        );
        assert!(matches!(
            potential_v(&q, &[0.0, 1.0, 2.0]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            grad_v(&q, &[1.0, 1.0, 2.0]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            drift_lambda(&q, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn drift_root_symbolic_value() {
        // -11/12 and -37/24, evaluated symbolically.
        let d = drift_root(&p(2.0, 0.5, 1.0, 2), &[1.0, 2.0]).unwrap();
        assert_relative_eq!(d[0], -11.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(d[1], -37.0 / 24.0, epsilon = 1e-15);
    }

    #[test]
    fn potential_symbolic_value() {
        let v = potential_v(&p(2.0, 0.5, 1.0, 2), &[1.0, 2.0]).unwrap();
        assert_relative_eq!(v, 2.5 - 0.25 * 6f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(v, 2.052_060_132_692_986_4, epsilon = 1e-14);
        let v0 = potential_v(&p(2.0, 0.5, 0.0, 2), &[1.0, 2.0]).unwrap();
        assert_relative_eq!(v0 - v, -2.5, epsilon = 1e-14);
    }

    #[test]
    fn ito_correspondence_root_to_lambda() {
        let q = p(2.0, 0.5, 1.0, 2);
        let x = [1.0, 2.0];
        let lam: Vec<f64> = x.iter().map(|v| v * v).collect();
        let dl = drift_lambda(&q, &lam).unwrap();
        let dr = drift_root(&q, &x).unwrap();
        for i in 0..2 {
            assert_relative_eq!(dl[i], 2.0 * x[i] * dr[i] + 1.0, epsilon = 1e-14);
        }
    }

    fn ordered(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..10.0, n).prop_map(|mut v| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // force strict order
            for i in 1..v.len() {
                if v[i] <= v[i - 1] {
                    v[i] = v[i - 1] + 1e-3;
                }
            }
            v
        })
    }

    proptest! {
        #[test]
        fn grad_is_minus_root_drift(
            alpha in 0.0f64..5.0, beta in 0.05f64..2.0, gamma in -2.0f64..2.0,
            x in ordered(4),
        ) {
            let q = p(alpha, beta, gamma, 4);
            let g = grad_v(&q, &x).unwrap();
            let d = drift_root(&q, &x).unwrap();
            for i in 0..4 {
                let scale = 1.0 + d[i].abs() + g[i].abs();
                prop_assert!((g[i] + d[i]).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn ito_identity_holds(
            alpha in 0.0f64..5.0, beta in 0.05f64..2.0, gamma in -2.0f64..2.0,
            x in ordered(3),
        ) {
            let q = p(alpha, beta, gamma, 3);
            let lam: Vec<f64> = x.iter().map(|v| v * v).collect();
            let dl = drift_lambda(&q, &lam).unwrap();
            let dr = drift_root(&q, &x).unwrap();
            for i in 0..3 {
                let rhs = 2.0 * x[i] * dr[i] + 1.0;
                prop_assert!((dl[i] - rhs).abs() <= 1e-9 * (1.0 + dl[i].abs()));
            }
        }
    }
}
