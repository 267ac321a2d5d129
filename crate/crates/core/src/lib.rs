//! Atomic homodyne detection on a two-mode Bose-Einstein condensate.
//!
//! The condensate in a double well is described in the Schwinger picture,
//! with `J_x` the population imbalance and `J_z` the tunneling coherence.
//! Three solution routes are provided and cross-checked against each other:
//!
//! * [`perturbation`]: closed-form zeroth/first-order expansion in the
//!   collision-to-dispersion ratio `ε = κ / (ξ N_f)`,
//! * [`meanfield`]: factorized Bloch equations integrated with fixed-step RK4,
//! * [`quantum`]: exact dynamics in the `(N+1)`-dimensional Dicke sector,
//!   including the measurement-dephasing master equation and diffusive
//!   homodyne trajectories.
//!
//! [`experiments`] bundles the figure reproductions and the regime sweep,
//! while [`config`] and [`artifacts`] handle run configuration and output.

// `!(x > 0.0)` is intentional throughout: NaN must fail parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;
pub mod meanfield;
pub mod model;
mod ode;
pub mod perturbation;
pub mod quantum;
pub mod series;

pub use error::{Error, Result};
pub use model::{BlochState, CavityParams, CondensateSignal, DerivedRates, TrapParams};
pub use series::{HomodyneRecord, TimeSeries};

/// Version string recorded in every manifest.
pub const VERSION: &str = match option_env!("HOMODYNE_GIT_DESCRIBE") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};
