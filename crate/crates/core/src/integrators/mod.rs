//! Time-stepping schemes and path drivers.
//!
//! Schemes:
//! - full-truncation Euler on the eigenvalue coordinates,
//! - the ε-regularized switching scheme, alternating between the drift
//!   regularized at zero (mode A) and the drift regularized at the first gap
//!   (mode B), stopped at `ζ_ε`,
//! - Euler on the square-root coordinates,
//! - the `κ < 0` square-root scheme with `1/(x ∨ ε)`, stopped at `S_ε`.
//!
//! After every step coordinates are clamped at zero (or reflected, in root
//! coordinates) and sorted.

mod drift_eps;
mod noise;
mod step;

pub use drift_eps::{clamp_a, clamp_b, drift_a_eps, drift_b_eps};
pub use noise::{NoiseIncrement, NoiseStream};
pub use step::{step_c_epsilon, step_root, step_switching, step_truncated_euler};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cir::CirParams;
use crate::collision::{EventDetector, EventKind, EventLog};
use crate::error::{Error, Result};
use crate::model::{check_ordered_nonneg, EigenState, ModelParams};
use step::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    TruncatedEuler,
    RegularizedSwitching,
    RootCoordinates,
    CEpsilon,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::TruncatedEuler,
        Scheme::RegularizedSwitching,
        Scheme::RootCoordinates,
        Scheme::CEpsilon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::TruncatedEuler => "truncated_euler",
            Scheme::RegularizedSwitching => "regularized_switching",
            Scheme::RootCoordinates => "root_coordinates",
            Scheme::CEpsilon => "c_epsilon",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("scheme: unknown scheme {s:?}")))
    }
}

/// Default regularization level tied to the step size.
pub fn default_epsilon(dt: f64) -> f64 {
    10.0 * dt.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    /// Regularization level `ε`.
    pub epsilon: f64,
    /// Event-detection level `δ`.
    pub collision_tol: f64,
    pub seed: u64,
    pub paths: usize,
    pub record_stride: usize,
    /// Initial eigenvalues, sorted and nonnegative.
    pub lambda0: Vec<f64>,
    /// Each step is the sum of this many finer Brownian increments; runs
    /// with `(dt, r)` and `(dt/r, 1)` see the same Brownian path.
    pub noise_refine: u32,
}

impl SimConfig {
    /// Defaults for dimension `n`: start `λ = (1, 2, ..., n)`.
    pub fn new(n: usize) -> Self {
        let dt = 1e-3;
        Self {
            scheme: Scheme::TruncatedEuler,
            dt,
            horizon: 1.0,
            epsilon: default_epsilon(dt),
            collision_tol: 1e-4,
            seed: 0,
            paths: 1,
            record_stride: 10,
            lambda0: (1..=n).map(|i| i as f64).collect(),
            noise_refine: 1,
        }
    }

    /// Floor `g = max(δ², dt)` for interaction denominators.
    pub fn guard(&self) -> f64 {
        (self.collision_tol * self.collision_tol).max(self.dt)
    }

    pub fn steps(&self) -> u64 {
        ((self.horizon / self.dt).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidConfig(format!("{field}: {msg}")));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", format!("must be > 0, got {}", self.dt));
        }
        if !(self.horizon > self.dt) || !self.horizon.is_finite() {
            return bad("horizon", format!("must exceed dt, got {}", self.horizon));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon", format!("must be > 0, got {}", self.epsilon));
        }
        if !(self.collision_tol > 0.0) || !self.collision_tol.is_finite() {
            return bad(
                "collision_tol",
                format!("must be > 0, got {}", self.collision_tol),
            );
        }
        if self.paths == 0 {
            return bad("paths", "must be >= 1".into());
        }
        if self.record_stride == 0 {
            return bad("record_stride", "must be >= 1".into());
        }
        if self.noise_refine == 0 {
            return bad("noise_refine", "must be >= 1".into());
        }
        check_ordered_nonneg(&self.lambda0).or_else(|e| bad("lambda0", e.to_string()))
    }

    fn check_against(&self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        self.validate()?;
        if self.lambda0.len() != params.n {
            return Err(Error::InvalidConfig(format!(
                "lambda0: expected {} coordinates, got {}",
                params.n,
                self.lambda0.len()
            )));
        }
        if self.scheme == Scheme::CEpsilon && params.kappa() >= 0.0 {
            return Err(Error::RegimeMismatch(format!(
                "c_epsilon needs kappa < 0, got kappa={}",
                params.kappa()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    AEps,
    BEps,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::AEps => "A_eps",
            Mode::BEps => "B_eps",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingMode {
    pub mode: Mode,
    pub switch_times: Vec<(f64, Mode)>,
}

impl SwitchingMode {
    /// Mode A when `λ¹ ≥ ε`, otherwise mode B.
    pub fn initial(lambda1: f64, epsilon: f64) -> Self {
        Self {
            mode: if lambda1 >= epsilon {
                Mode::AEps
            } else {
                Mode::BEps
            },
            switch_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Horizon,
    StoppedAtSEps,
    StoppedAtZetaEps,
    NumericalFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Horizon => "horizon",
            Termination::StoppedAtSEps => "stopped_at_S_eps",
            Termination::StoppedAtZetaEps => "stopped_at_zeta_eps",
            Termination::NumericalFailure => "numerical_failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub params: ModelParams,
    pub config: SimConfig,
    pub path_index: u64,
    pub times: Vec<f64>,
    pub states: Vec<EigenState>,
    pub terminated: Termination,
    /// Present for the switching scheme.
    pub switching: Option<SwitchingMode>,
}

impl PathRecord {
    pub fn final_state(&self) -> &EigenState {
        self.states
            .last()
            .expect("a path records at least its start")
    }

    /// Recorded state at time `t` (grid times only).
    pub fn state_at(&self, t: f64) -> Option<&EigenState> {
        let tol = 1e-9 * self.config.dt;
        self.states.iter().find(|s| (s.t - t).abs() <= tol)
    }
}

/// Stopping rule of the scheme, checked on eigenvalue coordinates.
fn stop_rule(scheme: Scheme, eps: f64, lam: &[f64]) -> Option<(Termination, EventKind)> {
    match scheme {
        Scheme::RegularizedSwitching if lam[0] <= eps && lam[1] - lam[0] <= eps => {
            Some((Termination::StoppedAtZetaEps, EventKind::JointEventZeta))
        }
        // x¹ ≤ √ε is λ¹ ≤ ε
        Scheme::CEpsilon if lam[0] <= eps => Some((Termination::StoppedAtSEps, EventKind::StopS)),
        _ => None,
    }
}

/// One path of the configured scheme. Deterministic in
/// `(params, config, path_index)`; a non-finite state ends the path with
/// [`Termination::NumericalFailure`] instead of an error.
pub fn simulate_path(
    params: &ModelParams,
    config: &SimConfig,
    path_index: u64,
) -> Result<(PathRecord, EventLog)> {
    run(params, config, path_index, true)
}

/// As [`simulate_path`] but keeps only the initial and the final state;
/// events are still detected at every step.
pub fn simulate_endpoints(
    params: &ModelParams,
    config: &SimConfig,
    path_index: u64,
) -> Result<(PathRecord, EventLog)> {
    run(params, config, path_index, false)
}

fn run(
    params: &ModelParams,
    config: &SimConfig,
    path_index: u64,
    record: bool,
) -> Result<(PathRecord, EventLog)> {
    config.check_against(params)?;
    let n = params.n;
    let mut kernel = Kernel::new(params, config);
    let mut state = kernel.native(&config.lambda0);
    let mut lam = config.lambda0.clone();
    let mut noise = NoiseStream::new(config.seed, path_index, n, config.dt, config.noise_refine);
    let mut dw = vec![0.0; n];
    let mut detector = EventDetector::new(n, config.collision_tol);

    let mut times = vec![0.0];
    let mut states = vec![EigenState {
        t: 0.0,
        lambda: lam.clone(),
    }];
    detector.observe(0.0, &lam);
    let mut terminated = Termination::Horizon;
    if let Some((term, kind)) = stop_rule(config.scheme, config.epsilon, &lam) {
        detector.log_mut().push(0.0, kind, config.epsilon);
        terminated = term;
    } else {
        let steps = config.steps();
        let stride = config.record_stride as u64;
        for k in 1..=steps {
            let t = k as f64 * config.dt;
            noise.fill(&mut dw);
            if kernel.advance(&mut state, &dw, t).is_err() {
                terminated = Termination::NumericalFailure;
                if !record {
                    let last = states.last().expect("start is recorded");
                    if last.lambda != lam {
                        let t_prev = (k - 1) as f64 * config.dt;
                        times.push(t_prev);
                        states.push(EigenState {
                            t: t_prev,
                            lambda: lam.clone(),
                        });
                    }
                }
                break;
            }
            kernel.to_lambda(&state, &mut lam);
            detector.observe(t, &lam);
            let stop = stop_rule(config.scheme, config.epsilon, &lam);
            if (record && k % stride == 0) || k == steps || stop.is_some() {
                times.push(t);
                states.push(EigenState {
                    t,
                    lambda: lam.clone(),
                });
            }
            if let Some((term, kind)) = stop {
                detector.log_mut().push(t, kind, config.epsilon);
                terminated = term;
                break;
            }
        }
    }
    let record = PathRecord {
        params: *params,
        config: config.clone(),
        path_index,
        times,
        states,
        terminated,
        switching: kernel.mode.take(),
    };
    Ok((record, detector.finish()))
}

/// `config.paths` paths with indices `0..paths`, in index order.
pub fn simulate_batch(
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Vec<(PathRecord, EventLog)>> {
    config.check_against(params)?;
    (0..config.paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(params, config, i))
        .collect()
}

/// Endpoint-only batch, see [`simulate_endpoints`].
pub fn simulate_batch_endpoints(
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Vec<(PathRecord, EventLog)>> {
    config.check_against(params)?;
    (0..config.paths as u64)
        .into_par_iter()
        .map(|i| simulate_endpoints(params, config, i))
        .collect()
}

/// Two systems driven by the same Brownian increments. `lambda0_b`
/// overrides the start of the second system.
pub fn simulate_coupled(
    params_a: &ModelParams,
    params_b: &ModelParams,
    config: &SimConfig,
    lambda0_b: Option<&[f64]>,
    path_index: u64,
) -> Result<(PathRecord, PathRecord)> {
    if params_a.n != params_b.n {
        return Err(Error::DimensionMismatch {
            expected: params_a.n,
            got: params_b.n,
        });
    }
    let mut config_b = config.clone();
    if let Some(l) = lambda0_b {
        config_b.lambda0 = l.to_vec();
    }
    let (a, _) = simulate_path(params_a, config, path_index)?;
    let (b, _) = simulate_path(params_b, &config_b, path_index)?;
    Ok((a, b))
}

/// Recorded values of a scalar square-root diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Pair of scalar CIR paths `dr = (a − b r) dt + 2√r dW` sharing one
/// Brownian path, simulated with the drift-implicit square-root scheme
///
/// ```text
/// y' = (z + √(z² + 2(a−1) dt)) / 2,   z = y(1 − b dt/2) + dW,   r = y²
/// ```
///
/// which is increasing in both `y` and `a`, so `a₁ ≥ a₂` and `r₁(0) ≥ r₂(0)`
/// keep the discrete paths ordered. Needs `a ≥ 1`, `σ = 2` and `b dt < 2`.
pub fn simulate_coupled_cir(
    cir_a: &CirParams,
    cir_b: &CirParams,
    r0: (f64, f64),
    config: &SimConfig,
    path_index: u64,
) -> Result<(ScalarPath, ScalarPath)> {
    config.validate()?;
    for c in [cir_a, cir_b] {
        if c.sigma != 2.0 || c.a < 1.0 || c.b * config.dt >= 2.0 {
            return Err(Error::InvalidParams(format!(
                "implicit square-root scheme needs sigma = 2, a >= 1 and b dt < 2, got {c:?}"
            )));
        }
    }
    if !(r0.0 >= 0.0 && r0.1 >= 0.0) {
        return Err(Error::DomainError(format!("negative start {r0:?}")));
    }
    let mut noise = NoiseStream::new(config.seed, path_index, 1, config.dt, config.noise_refine);
    let mut dw = [0.0];
    let dt = config.dt;
    let step = |y: f64, c: &CirParams, w: f64| {
        let z = y * (1.0 - c.b * dt / 2.0) + w;
        (z + (z * z + 2.0 * (c.a - 1.0) * dt).sqrt()) / 2.0
    };
    let (mut ya, mut yb) = (r0.0.sqrt(), r0.1.sqrt());
    let mut pa = ScalarPath {
        times: vec![0.0],
        values: vec![r0.0],
    };
    let mut pb = ScalarPath {
        times: vec![0.0],
        values: vec![r0.1],
    };
    let steps = config.steps();
    let stride = config.record_stride as u64;
    for k in 1..=steps {
        noise.fill(&mut dw);
        ya = step(ya, cir_a, dw[0]);
        yb = step(yb, cir_b, dw[0]);
        if !(ya.is_finite() && yb.is_finite()) {
            return Err(Error::NumericalFailure { t: k as f64 * dt });
        }
        if k % stride == 0 || k == steps {
            let t = k as f64 * dt;
            pa.times.push(t);
            pa.values.push(ya * ya);
            pb.times.push(t);
            pb.values.push(yb * yb);
        }
    }
    Ok((pa, pb))
}
