//! Analytic classification of a parameter point: global existence, pair
//! collisions, zero hits of the smallest coordinate and multiple collisions
//! in zero of the first `k` coordinates.

use std::fmt;

use super::ModelParams;
use crate::error::{Error, Result};

/// Lifetime of the strong solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalSolution {
    /// `κ < 0`: defined until `λ¹` reaches zero.
    None,
    /// `0 <= κ < 1−β`: defined until the joint event `λ¹ = λ² − λ¹ = 0`,
    /// which occurs in finite time.
    UntilJointEvent,
    /// `κ >= 1−β`: defined on all of `[0, ∞)`.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCollisions {
    /// `β >= 1`
    Impossible,
    /// `β < 1`
    AlmostSure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroHit {
    /// `κ >= 2`
    Never,
    Possible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiCollisionVerdict {
    /// `k(α−(n−k)β) < 2` and `γ >= 0`.
    AlmostSureZeroHit,
    /// `k(α−(n−k)β) >= 2`.
    Never,
    /// `k(α−(n−k)β) < 2` and `γ < 0`.
    ProbInZeroOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiCollisionEntry {
    pub k: usize,
    pub threshold: f64,
    pub verdict: MultiCollisionVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub kappa: f64,
    pub global_solution: GlobalSolution,
    pub pair_collisions: PairCollisions,
    pub zero_hit_lambda1: ZeroHit,
    /// One entry per `k = 1..=n`, in order.
    pub multiple_collision_k: Vec<MultiCollisionEntry>,
}

impl RegimeReport {
    pub fn multiple_collision(&self, k: usize) -> Option<&MultiCollisionEntry> {
        self.multiple_collision_k.get(k.checked_sub(1)?)
    }
}

/// `k(α−(n−k)β)` and the corresponding verdict for the event
/// `λ¹ + ... + λᵏ = 0`.
pub fn multiple_collision_threshold(
    params: &ModelParams,
    k: usize,
) -> Result<(f64, MultiCollisionVerdict)> {
    let n = params.n;
    if k < 1 || k > n {
        return Err(Error::BadK { k, n });
    }
    let kf = k as f64;
    let value = kf * (params.alpha - (n - k) as f64 * params.beta);
    let verdict = if value >= 2.0 {
        MultiCollisionVerdict::Never
    } else if params.gamma >= 0.0 {
        MultiCollisionVerdict::AlmostSureZeroHit
    } else {
        MultiCollisionVerdict::ProbInZeroOne
    };
    Ok((value, verdict))
}

pub fn classify_regime(params: &ModelParams) -> RegimeReport {
    let kappa = params.kappa();
    let beta = params.beta;
    let global_solution = if kappa < 0.0 {
        GlobalSolution::None
    } else if kappa >= 1.0 - beta {
        GlobalSolution::Global
    } else {
        GlobalSolution::UntilJointEvent
    };
    let pair_collisions = if beta >= 1.0 {
        PairCollisions::Impossible
    } else {
        PairCollisions::AlmostSure
    };
    let multiple_collision_k: Vec<_> = (1..=params.n)
        .map(|k| {
            let (threshold, verdict) = multiple_collision_threshold(params, k).expect("k in range");
            MultiCollisionEntry {
                k,
                threshold,
                verdict,
            }
        })
        .collect();
    // k = 1 threshold is κ itself
    let zero_hit_lambda1 = match multiple_collision_k[0].verdict {
        MultiCollisionVerdict::Never => ZeroHit::Never,
        _ => ZeroHit::Possible,
    };
    RegimeReport {
        kappa,
        global_solution,
        pair_collisions,
        zero_hit_lambda1,
        multiple_collision_k,
    }
}

impl fmt::Display for GlobalSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GlobalSolution::None => "none",
            GlobalSolution::UntilJointEvent => "until_joint_event",
            GlobalSolution::Global => "global",
        })
    }
}

impl fmt::Display for PairCollisions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairCollisions::Impossible => "impossible",
            PairCollisions::AlmostSure => "almost_sure",
        })
    }
}

impl fmt::Display for ZeroHit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroHit::Never => "never",
            ZeroHit::Possible => "possible",
        })
    }
}

impl fmt::Display for MultiCollisionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiCollisionVerdict::AlmostSureZeroHit => "almost_sure_zero_hit",
            MultiCollisionVerdict::Never => "never",
            MultiCollisionVerdict::ProbInZeroOne => "prob_in_0_1",
        })
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kappa={}", self.kappa)?;
        writeln!(f, "global_solution={}", self.global_solution)?;
        writeln!(f, "pair_collisions={}", self.pair_collisions)?;
        writeln!(f, "zero_hit_lambda1={}", self.zero_hit_lambda1)?;
        for e in &self.multiple_collision_k {
            writeln!(
                f,
                "multiple_collision_k{}={} threshold={}",
                e.k, e.verdict, e.threshold
            )?;
        }
        Ok(())
    }
}
