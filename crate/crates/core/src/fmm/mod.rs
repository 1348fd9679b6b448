//! Fast Marching: local update, priority queue, solver state and drivers.

pub mod heap;
pub mod march;
pub mod solve;
pub mod state;
pub mod update;

pub use march::{Marcher, Phi};
pub use solve::{
    bidirectional_solve, fmm_solve, fmm_solve_in, is_causal, is_monotone, max_residual, Bidirectional, Problem, Stop,
};
pub use state::{Branch, ExitSet, Label, SolverState, UpwindRecord};
pub use update::{local_update, local_update_axes, Update};
