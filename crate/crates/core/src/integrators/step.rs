//! One-step maps of the schemes. All public steppers take the state by
//! reference and return a new state; the path driver reuses the in-place
//! kernels below.

use super::drift_eps::{
    drift_a_eps_guarded, drift_b_eps_guarded, drift_lambda_guarded, drift_root_guarded,
};
use super::{Mode, NoiseIncrement, Scheme, SimConfig, SwitchingMode};
use crate::error::{Error, Result};
use crate::model::{EigenState, ModelParams, RootState};

fn sort(v: &mut [f64]) {
    v.sort_unstable_by(f64::total_cmp);
}

/// `λ ← max(λ + b dt + 2√λ dW, 0)`, then sort.
pub(crate) fn euler_lambda(
    lam: &mut [f64],
    drift: &[f64],
    dw: &[f64],
    dt: f64,
    t: f64,
) -> Result<()> {
    for ((l, &b), &w) in lam.iter_mut().zip(drift).zip(dw) {
        let v = *l + b * dt + 2.0 * l.sqrt() * w;
        if !v.is_finite() {
            return Err(Error::NumericalFailure { t });
        }
        *l = v.max(0.0);
    }
    sort(lam);
    Ok(())
}

/// `x ← |x + b dt + dW|`, then sort. Reflection is the natural boundary
/// rule since only `x² = λ` is observed.
pub(crate) fn euler_root(x: &mut [f64], drift: &[f64], dw: &[f64], dt: f64, t: f64) -> Result<()> {
    for ((xi, &b), &w) in x.iter_mut().zip(drift).zip(dw) {
        let v = *xi + b * dt + w;
        if !v.is_finite() {
            return Err(Error::NumericalFailure { t });
        }
        *xi = v.abs();
    }
    sort(x);
    Ok(())
}

/// Mode after a step of the switching scheme.
#[inline]
pub(crate) fn next_mode(mode: Mode, lambda1: f64, epsilon: f64) -> Mode {
    match mode {
        Mode::AEps if lambda1 <= epsilon / 2.0 => Mode::BEps,
        Mode::BEps if lambda1 >= epsilon => Mode::AEps,
        m => m,
    }
}

/// Scheme-specific state and scratch for the path driver. Root-coordinate
/// schemes keep `x = √λ` as their native state.
pub(crate) struct Kernel {
    params: ModelParams,
    scheme: Scheme,
    dt: f64,
    epsilon: f64,
    guard: f64,
    root_floor: f64,
    drift: Vec<f64>,
    pub(crate) mode: Option<SwitchingMode>,
}

impl Kernel {
    pub(crate) fn new(params: &ModelParams, config: &SimConfig) -> Self {
        let mode = (config.scheme == Scheme::RegularizedSwitching)
            .then(|| SwitchingMode::initial(config.lambda0[0], config.epsilon));
        Self {
            params: *params,
            scheme: config.scheme,
            dt: config.dt,
            epsilon: config.epsilon,
            guard: config.guard(),
            root_floor: config.collision_tol,
            drift: vec![0.0; params.n],
            mode,
        }
    }

    pub(crate) fn is_root(&self) -> bool {
        matches!(self.scheme, Scheme::RootCoordinates | Scheme::CEpsilon)
    }

    /// Native state from eigenvalue coordinates.
    pub(crate) fn native(&self, lambda: &[f64]) -> Vec<f64> {
        if self.is_root() {
            lambda.iter().map(|l| l.sqrt()).collect()
        } else {
            lambda.to_vec()
        }
    }

    pub(crate) fn to_lambda(&self, state: &[f64], lam: &mut [f64]) {
        if self.is_root() {
            for (l, x) in lam.iter_mut().zip(state) {
                *l = x * x;
            }
        } else {
            lam.copy_from_slice(state);
        }
    }

    /// Advance the native state by one step ending at time `t_new`.
    pub(crate) fn advance(&mut self, state: &mut [f64], dw: &[f64], t_new: f64) -> Result<()> {
        let p = &self.params;
        match self.scheme {
            Scheme::TruncatedEuler => {
                drift_lambda_guarded(p, state, self.guard, &mut self.drift);
                euler_lambda(state, &self.drift, dw, self.dt, t_new)
            }
            Scheme::RegularizedSwitching => {
                let sw = self.mode.as_mut().expect("switching state");
                match sw.mode {
                    Mode::AEps => {
                        drift_a_eps_guarded(p, self.epsilon, state, self.guard, &mut self.drift)
                    }
                    Mode::BEps => {
                        drift_b_eps_guarded(p, self.epsilon, state, self.guard, &mut self.drift)
                    }
                }
                euler_lambda(state, &self.drift, dw, self.dt, t_new)?;
                let m = next_mode(sw.mode, state[0], self.epsilon);
                if m != sw.mode {
                    sw.mode = m;
                    sw.switch_times.push((t_new, m));
                }
                Ok(())
            }
            Scheme::RootCoordinates => {
                drift_root_guarded(p, state, self.root_floor, self.guard, &mut self.drift);
                euler_root(state, &self.drift, dw, self.dt, t_new)
            }
            Scheme::CEpsilon => {
                drift_root_guarded(p, state, self.epsilon, self.guard, &mut self.drift);
                euler_root(state, &self.drift, dw, self.dt, t_new)
            }
        }
    }
}

fn check_noise(params: &ModelParams, noise: &NoiseIncrement) -> Result<()> {
    params.check_dim(noise.dw.len())
}

/// Full-truncation Euler step of the symmetric drift; pair denominators are
/// floored in magnitude at `guard`.
pub fn step_truncated_euler(
    params: &ModelParams,
    state: &EigenState,
    dt: f64,
    noise: &NoiseIncrement,
    guard: f64,
) -> Result<EigenState> {
    params.check_dim(state.lambda.len())?;
    check_noise(params, noise)?;
    let mut lam = state.lambda.clone();
    let mut drift = vec![0.0; lam.len()];
    drift_lambda_guarded(params, &lam, guard, &mut drift);
    let t = state.t + dt;
    euler_lambda(&mut lam, &drift, &noise.dw, dt, t)?;
    Ok(EigenState { t, lambda: lam })
}

/// One step of the switching scheme: Euler with the mode's regularized
/// drift, then the end-of-step mode update (`A→B` at `λ¹ ≤ ε/2`, `B→A` at
/// `λ¹ ≥ ε`). Switches are appended to `mode`.
pub fn step_switching(
    params: &ModelParams,
    config: &SimConfig,
    state: &EigenState,
    mode: &mut SwitchingMode,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<EigenState> {
    params.check_dim(state.lambda.len())?;
    check_noise(params, noise)?;
    let mut lam = state.lambda.clone();
    let mut drift = vec![0.0; lam.len()];
    let (eps, g) = (config.epsilon, config.guard());
    match mode.mode {
        Mode::AEps => drift_a_eps_guarded(params, eps, &lam, g, &mut drift),
        Mode::BEps => drift_b_eps_guarded(params, eps, &lam, g, &mut drift),
    }
    let t = state.t + dt;
    euler_lambda(&mut lam, &drift, &noise.dw, dt, t)?;
    let m = next_mode(mode.mode, lam[0], eps);
    if m != mode.mode {
        mode.mode = m;
        mode.switch_times.push((t, m));
    }
    Ok(EigenState { t, lambda: lam })
}

/// Euler step of the square-root system with `1/x` replaced by `1/(x ∨ ε)`:
///
/// ```text
/// dxⁱ = dBⁱ + ((κ−1)/2) dt/(xⁱ ∨ ε) − γxⁱ dt + βxⁱ Σ_{j≠i} dt/((xⁱ)²−(xʲ)²)
/// ```
pub fn step_c_epsilon(
    params: &ModelParams,
    config: &SimConfig,
    root_state: &RootState,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<RootState> {
    params.check_dim(root_state.x.len())?;
    check_noise(params, noise)?;
    let mut x = root_state.x.clone();
    let mut drift = vec![0.0; x.len()];
    drift_root_guarded(params, &x, config.epsilon, config.guard(), &mut drift);
    let t = root_state.t + dt;
    euler_root(&mut x, &drift, &noise.dw, dt, t)?;
    Ok(RootState { t, x })
}

/// Euler step of the square-root system without regularization at zero
/// beyond the floor `x ∨ floor`.
pub fn step_root(
    params: &ModelParams,
    root_state: &RootState,
    dt: f64,
    noise: &NoiseIncrement,
    floor: f64,
    guard: f64,
) -> Result<RootState> {
    params.check_dim(root_state.x.len())?;
    check_noise(params, noise)?;
    let mut x = root_state.x.clone();
    let mut drift = vec![0.0; x.len()];
    drift_root_guarded(params, &x, floor, guard, &mut drift);
    let t = root_state.t + dt;
    euler_root(&mut x, &drift, &noise.dw, dt, t)?;
    Ok(RootState { t, x })
}
