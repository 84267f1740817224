//! Simulation laboratory for the eigenvalue process of a Wishart-type matrix
//! diffusion.
//!
//! The coordinates `0 <= λ¹ <= ... <= λⁿ` follow
//!
//! ```text
//! dλⁱ = 2 √λⁱ dBⁱ + (α − 2γλⁱ + β Σ_{j≠i} (λⁱ+λʲ)/(λⁱ−λʲ)) dt
//! ```
//!
//! i.e. each coordinate is a CIR process pushed away from its neighbours by a
//! Coulomb-like repulsion. The crate provides the drift and potential, the
//! analytic regime classifier, exact scalar CIR machinery used as ground
//! truth, several time-stepping schemes, collision/first-passage detection,
//! stationary-law tools and the statistics needed to compare them.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cir;
pub mod collision;
pub mod error;
pub mod integrators;
pub mod model;
pub mod stationary;
pub mod stats;

pub use cir::{CirBoundary, CirParams, CirState, LaplaceQuery};
pub use collision::{EventDetector, EventKind, EventLog, PathExtremes, TimeChange};
pub use error::{Error, Result};
pub use integrators::{
    NoiseIncrement, NoiseStream, PathRecord, Scheme, SimConfig, SwitchingMode, Termination,
};
pub use model::{
    EigenState, GlobalSolution, ModelParams, MultiCollisionVerdict, PairCollisions, RegimeReport,
    RootState, ZeroHit,
};
pub use stationary::{SampleSet, StationaryDensity};
pub use stats::{KsResult, StatSummary};
