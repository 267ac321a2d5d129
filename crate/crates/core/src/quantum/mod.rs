//! Exact fixed-N dynamics in the `(N+1)`-dimensional Dicke sector.
//!
//! Everything is represented in the eigenbasis of the imbalance `J_x`, so the
//! measured observable is diagonal: basis index `i` carries `m = −N/2 + i`.

mod ensemble;
mod master;
mod operators;
mod trajectory;

pub use ensemble::{conditional_current_via_cavity, ensemble_average, run_ensemble};
pub use master::{evolve_master, MasterRun};
pub use operators::{
    build_hamiltonian, build_spin_operators, build_spin_operators_capped, coherent_spin_state, CMatrix,
    CVector, QuantumState, SpinOperators, DIMENSION_CAP,
};
pub use trajectory::{sse_trajectory, SseForm, SseSettings};
