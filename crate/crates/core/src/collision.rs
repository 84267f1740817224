//! Event detection on discrete paths: pair collisions, zero hits of partial
//! sums, the joint event `λ¹ ≤ δ, λ²−λ¹ ≤ δ`, simultaneous double events,
//! plus time changes and integrability diagnostics.
//!
//! Events are first grid crossings; "simultaneous" means the same step.

use std::fmt;

use crate::error::{Error, Result};
use crate::integrators::{simulate_batch_endpoints, PathRecord, SimConfig};
use crate::model::ModelParams;
use crate::stats::StatSummary;

/// Detection levels used by first-passage estimates.
pub const DELTA_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Gap `λ^{i+1} − λ^i` at or below the level; carries `i` (1-based).
    PairCollision(usize),
    /// `λ¹ + ... + λᵏ` at or below the level; carries `k`.
    ZeroHitPartialSum(usize),
    /// `λ¹` and `λ²−λ¹` both at or below the level.
    JointEventZeta,
    /// Stopping level of the `κ < 0` scheme reached.
    StopS,
    /// Two distinct gaps at or below the level in the same step.
    MultipleCollision(usize, usize),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PairCollision(_) => "pair_collision",
            EventKind::ZeroHitPartialSum(_) => "zero_hit_partial_sum",
            EventKind::JointEventZeta => "joint_event_zeta",
            EventKind::StopS => "stop_S",
            EventKind::MultipleCollision(..) => "multiple_collision",
        }
    }

    /// Index column for tabular output; 0 when the kind carries none.
    pub fn index(&self) -> usize {
        match *self {
            EventKind::PairCollision(i) | EventKind::ZeroHitPartialSum(i) => i,
            EventKind::MultipleCollision(i, _) => i,
            _ => 0,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::MultipleCollision(i, j) => write!(f, "{}({i},{j})", self.name()),
            EventKind::JointEventZeta | EventKind::StopS => f.write_str(self.name()),
            _ => write!(f, "{}({})", self.name(), self.index()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub level: f64,
}

/// Running minima over all observed steps. They let a single run answer
/// "was level δ reached" for any δ.
#[derive(Debug, Clone, PartialEq)]
pub struct PathExtremes {
    /// Per adjacent gap.
    pub min_gap: Vec<f64>,
    /// Per partial sum `λ¹ + ... + λᵏ`.
    pub min_partial_sum: Vec<f64>,
    /// `min_t max(λ¹, λ²−λ¹)`.
    pub min_joint: f64,
    /// `min_t` of the second-smallest gap (simultaneous double pair events);
    /// infinite for `n = 2`.
    pub min_second_gap: f64,
    /// Same minimum over the steps before the joint event first holds at
    /// the detector level, i.e. while a solution is guaranteed to exist.
    pub min_second_gap_before_joint: f64,
}

impl PathExtremes {
    fn new(n: usize) -> Self {
        Self {
            min_gap: vec![f64::INFINITY; n.saturating_sub(1)],
            min_partial_sum: vec![f64::INFINITY; n],
            min_joint: f64::INFINITY,
            min_second_gap: f64::INFINITY,
            min_second_gap_before_joint: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub extremes: PathExtremes,
}

impl EventLog {
    pub fn new(n: usize) -> Self {
        Self {
            events: Vec::new(),
            extremes: PathExtremes::new(n),
        }
    }

    pub fn push(&mut self, time: f64, kind: EventKind, level: f64) {
        self.events.push(Event { time, kind, level });
    }

    pub fn first(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn has_pair_collision(&self) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e.kind, EventKind::PairCollision(_)))
    }

    pub fn has_multiple_collision(&self) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e.kind, EventKind::MultipleCollision(..)))
    }
}

/// Streaming detector; feed states in time order.
#[derive(Debug, Clone)]
pub struct EventDetector {
    delta: f64,
    seen_pair: Vec<bool>,
    seen_partial: Vec<bool>,
    seen_joint: bool,
    seen_multiple: bool,
    joint_now: bool,
    log: EventLog,
}

impl EventDetector {
    pub fn new(n: usize, delta: f64) -> Self {
        Self {
            delta,
            seen_pair: vec![false; n.saturating_sub(1)],
            seen_partial: vec![false; n],
            seen_joint: false,
            seen_multiple: false,
            joint_now: false,
            log: EventLog::new(n),
        }
    }

    pub fn observe(&mut self, t: f64, lam: &[f64]) {
        let d = self.delta;
        let ext = &mut self.log.extremes;
        let (mut small, mut second) = (f64::INFINITY, f64::INFINITY);
        let mut low: [usize; 2] = [0; 2];
        let mut n_low = 0;
        for i in 0..lam.len() - 1 {
            let g = lam[i + 1] - lam[i];
            ext.min_gap[i] = ext.min_gap[i].min(g);
            if g < small {
                second = small;
                small = g;
            } else if g < second {
                second = g;
            }
            if g <= d {
                if n_low < 2 {
                    low[n_low] = i + 1;
                }
                n_low += 1;
                if !self.seen_pair[i] {
                    self.seen_pair[i] = true;
                    self.log.events.push(Event {
                        time: t,
                        kind: EventKind::PairCollision(i + 1),
                        level: d,
                    });
                }
            }
        }
        ext.min_second_gap = ext.min_second_gap.min(second);
        let joint = lam[0].max(lam[1] - lam[0]);
        ext.min_joint = ext.min_joint.min(joint);
        if joint <= d {
            self.joint_now = true;
        }
        if !self.joint_now {
            ext.min_second_gap_before_joint = ext.min_second_gap_before_joint.min(second);
        }
        let mut s = 0.0;
        for (k, &l) in lam.iter().enumerate() {
            s += l;
            ext.min_partial_sum[k] = ext.min_partial_sum[k].min(s);
            if s <= d && !self.seen_partial[k] {
                self.seen_partial[k] = true;
                self.log.events.push(Event {
                    time: t,
                    kind: EventKind::ZeroHitPartialSum(k + 1),
                    level: d,
                });
            }
        }
        if joint <= d && !self.seen_joint {
            self.seen_joint = true;
            self.log.push(t, EventKind::JointEventZeta, d);
        }
        if n_low >= 2 && !self.seen_multiple {
            self.seen_multiple = true;
            self.log
                .push(t, EventKind::MultipleCollision(low[0], low[1]), d);
        }
    }

    pub fn log_mut(&mut self) -> &mut EventLog {
        &mut self.log
    }

    pub fn finish(self) -> EventLog {
        self.log
    }
}

/// Events of a recorded path at level `delta`, evaluated on the recorded
/// grid only.
pub fn detect_events(path: &PathRecord, delta: f64) -> EventLog {
    let mut det = EventDetector::new(path.params.n, delta);
    for s in &path.states {
        det.observe(s.t, &s.lambda);
    }
    det.finish()
}

/// Fraction of paths whose partial sum `λ¹ + ... + λᵏ` reaches each level
/// of [`DELTA_LADDER`] by the horizon, with Wilson intervals.
pub fn first_passage_partial_sum(
    params: &ModelParams,
    config: &SimConfig,
    k: usize,
) -> Result<Vec<StatSummary>> {
    if k == 0 || k > params.n {
        return Err(Error::BadK { k, n: params.n });
    }
    let runs = simulate_batch_endpoints(params, config)?;
    let mins: Vec<f64> = runs
        .iter()
        .map(|(_, log)| log.extremes.min_partial_sum[k - 1])
        .collect();
    Ok(partial_sum_ladder(&mins, k))
}

/// Hit fractions at every ladder level from per-path minima.
pub fn partial_sum_ladder(minima: &[f64], k: usize) -> Vec<StatSummary> {
    DELTA_LADDER
        .iter()
        .map(|&d| {
            let hits = minima.iter().filter(|&&m| m <= d).count();
            StatSummary::proportion(format!("partial_sum_k{k}_delta{d:e}"), hits, minima.len())
        })
        .collect()
}

/// `A(t) = 4 ∫₀ᵗ (λⁱ + λ^{i−1}) ds` on the recorded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    pub i: usize,
    pub grid: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn final_value(&self) -> f64 {
        self.grid.last().map_or(0.0, |g| g.1)
    }

    /// Smallest grid time with `A(t) ≥ a`, linearly interpolated; `None`
    /// beyond the recorded range.
    pub fn inverse(&self, a: f64) -> Option<f64> {
        let pos = self.grid.iter().position(|&(_, v)| v >= a)?;
        if pos == 0 {
            return Some(self.grid[0].0);
        }
        let (t0, a0) = self.grid[pos - 1];
        let (t1, a1) = self.grid[pos];
        if a1 == a0 {
            return Some(t0);
        }
        Some(t0 + (a - a0) / (a1 - a0) * (t1 - t0))
    }
}

/// Trapezoidal time change of coordinates `i−1, i` (1-based, `i ≥ 2`).
pub fn time_change_a(path: &PathRecord, i: usize) -> Result<TimeChange> {
    if i < 2 || i > path.params.n {
        return Err(Error::BadK {
            k: i,
            n: path.params.n,
        });
    }
    let f = |l: &[f64]| 4.0 * (l[i - 1] + l[i - 2]);
    let mut grid = Vec::with_capacity(path.states.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in &path.states {
        let v = f(&s.lambda);
        if let Some((t0, v0)) = prev {
            acc += 0.5 * (v + v0) * (s.t - t0);
        }
        grid.push((s.t, acc));
        prev = Some((s.t, v));
    }
    Ok(TimeChange { i, grid })
}

/// Dimension `β + 1` of the Bessel process governing a gap near collision,
/// and whether it reaches zero (`β ≤ 1`).
pub fn bessel_collision_dimension(beta: f64) -> Result<(f64, bool)> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    Ok((beta + 1.0, beta <= 1.0))
}

/// Per adjacent pair, `∫₀ᵀ λ^{i+1}/(λ^{i+1} − λ^i) ds` by the trapezoid rule
/// with the denominator floored at the integrator's guard.
pub fn integrability_diagnostic(path: &PathRecord) -> Vec<f64> {
    let n = path.params.n;
    let g = path.config.guard();
    let f = |l: &[f64], i: usize| l[i + 1] / (l[i + 1] - l[i]).max(g);
    let mut out = vec![0.0; n - 1];
    for w in path.states.windows(2) {
        let dt = w[1].t - w[0].t;
        for (i, o) in out.iter_mut().enumerate() {
            *o += 0.5 * (f(&w[0].lambda, i) + f(&w[1].lambda, i)) * dt;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::Termination;
    use crate::model::EigenState;

    fn synthetic(n: usize, f: impl Fn(f64) -> Vec<f64>, steps: usize, horizon: f64) -> PathRecord {
        let params = ModelParams::new(2.0, 0.5, 0.0, n).unwrap();
        let mut config = SimConfig::new(n);
        config.dt = horizon / steps as f64;
        config.horizon = horizon;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * config.dt).collect();
        let states = times
            .iter()
            .map(|&t| EigenState { t, lambda: f(t) })
            .collect();
        PathRecord {
            params,
            config,
            path_index: 0,
            times,
            states,
            terminated: Termination::Horizon,
            switching: None,
        }
    }

    #[test]
    fn constant_path_has_no_events() {
        let p = synthetic(3, |_| vec![1.0, 2.0, 3.0], 10, 1.0);
        assert!(detect_events(&p, 0.5).events.is_empty());
    }

    #[test]
    fn linear_decay_hits_at_first_grid_time() {
        let p = synthetic(2, |t| vec![1.0 - t, 2.0], 100, 1.0);
        let log = detect_events(&p, 0.05);
        let e = log.first(EventKind::ZeroHitPartialSum(1)).unwrap();
        assert!((e.time - 0.95).abs() < 1e-12);
        assert!(log.first(EventKind::ZeroHitPartialSum(2)).is_none());
    }

    #[test]
    fn shrinking_delta_never_earlier() {
        let p = synthetic(3, |t| vec![0.0, 1.0 - t, 2.0 - 2.0 * t], 200, 1.0);
        let mut prev = 0.0;
        for d in [0.5, 0.1, 0.01] {
            let t = detect_events(&p, d)
                .first(EventKind::PairCollision(1))
                .unwrap()
                .time;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn double_event_detected() {
        let p = synthetic(3, |t| vec![1.0 - t, 1.0, 1.0 + t], 10, 1.0);
        let log = detect_events(&p, 1e-9);
        assert_eq!(log.events[0].kind, EventKind::PairCollision(1));
        assert!(log.has_multiple_collision());
        assert_eq!(log.extremes.min_second_gap, 0.0);
        let times: Vec<f64> = log.events.iter().map(|e| e.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn time_change_examples() {
        let p = synthetic(2, |_| vec![1.0, 2.0], 10, 1.0);
        let a = time_change_a(&p, 2).unwrap();
        assert!((a.final_value() - 12.0).abs() < 1e-12);
        assert!((a.inverse(6.0).unwrap() - 0.5).abs() < 1e-12);
        let z = synthetic(2, |_| vec![0.0, 0.0], 10, 1.0);
        assert!(time_change_a(&z, 2)
            .unwrap()
            .grid
            .iter()
            .all(|g| g.1 == 0.0));
        assert!(time_change_a(&p, 1).is_err());
    }

    #[test]
    fn bessel_dimensions() {
        assert_eq!(bessel_collision_dimension(0.5).unwrap(), (1.5, true));
        assert_eq!(bessel_collision_dimension(1.0).unwrap(), (2.0, true));
        assert_eq!(bessel_collision_dimension(1.5).unwrap(), (2.5, false));
        assert!(bessel_collision_dimension(0.0).is_err());
    }

    #[test]
    fn integrability_constant_path() {
        let p = synthetic(2, |_| vec![1.0, 3.0], 10, 1.0);
        assert!((integrability_diagnostic(&p)[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn integrability_log_growth_near_collision() {
        // gap = t0 − t with λ² = 1: the integral of 1/(t0 − s) over [0, T]
        // is ln(t0 / (t0 − T)).
        let t0 = 1.0;
        let mut prev = 0.0;
        for horizon in [0.9, 0.99, 0.999] {
            let p = synthetic(2, |t| vec![1.0 - (t0 - t), 1.0], 20_000, horizon);
            let d = integrability_diagnostic(&p)[0];
            let exact = (t0 / (t0 - horizon)).ln();
            assert!((d - exact).abs() < 0.01 * exact, "{d} vs {exact}");
            assert!(d > prev);
            prev = d;
        }
    }
}
