//! Parameters, states, drift fields, the potential and the regime classifier.

mod drift;
mod regime;

pub(crate) use drift::check_distinct;
pub use drift::{
    drift_lambda, drift_lambda_dual, drift_lambda_into, drift_root, grad_v, potential_v,
};
pub use regime::{
    classify_regime, multiple_collision_threshold, GlobalSolution, MultiCollisionEntry,
    MultiCollisionVerdict, PairCollisions, RegimeReport, ZeroHit,
};

use crate::error::{Error, Result};

/// Coefficients `(α, β, γ, n)` of the particle system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, n: usize) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParams(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParams("gamma must be finite".into()));
        }
        Ok(())
    }

    /// `κ = α − (n−1)β`, the net drift of the smallest coordinate at zero.
    #[inline]
    pub fn kappa(&self) -> f64 {
        self.alpha - (self.n as f64 - 1.0) * self.beta
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// Eigenvalue coordinates at time `t`, nonnegative and nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenState {
    pub t: f64,
    pub lambda: Vec<f64>,
}

impl EigenState {
    pub fn new(t: f64, lambda: Vec<f64>) -> Result<Self> {
        let s = Self { t, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) {
            return Err(Error::DomainError(format!("negative time {}", self.t)));
        }
        check_ordered_nonneg(&self.lambda)
    }

    pub fn sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn to_root(&self) -> RootState {
        RootState {
            t: self.t,
            x: self.lambda.iter().map(|l| l.sqrt()).collect(),
        }
    }
}

/// Square-root coordinates `xⁱ = √λⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootState {
    pub t: f64,
    pub x: Vec<f64>,
}

impl RootState {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        let s = Self { t, x };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) {
            return Err(Error::DomainError(format!("negative time {}", self.t)));
        }
        check_ordered_nonneg(&self.x)
    }

    pub fn to_eigen(&self) -> EigenState {
        EigenState {
            t: self.t,
            lambda: self.x.iter().map(|x| x * x).collect(),
        }
    }
}

pub(crate) fn check_ordered_nonneg(v: &[f64]) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::DomainError(format!(
                "coordinate {} = {x} is not >= 0",
                i + 1
            )));
        }
    }
    if let Some(i) = v.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::DomainError(format!(
            "coordinates {} and {} out of order",
            i + 1,
            i + 2
        )));
    }
    Ok(())
}
