//! Single-source/single-target Eikonal solvers on uniform grids.
//!
//! The crate computes the minimum travel time `u` to a target `t` under a
//! speed field `f`, i.e. the solution of `|grad u| f = 1` discretised with
//! first-order upwind differences, and offers several ways to avoid solving
//! on the whole grid when only `u(s)` for one source `s` is needed:
//!
//! * [`fmm`]: Fast Marching with full, stop-at-source and bidirectional modes.
//! * [`astar`]: SA*-FMM (acceptance reordered by `U + phi`) and AA*-FMM
//!   (consideration pruned by `U + phi <= Psi`, optionally with branch and
//!   bound).
//! * [`heuristics`]: underestimates `phi`, overestimates `psi`/`Psi` and the
//!   ellipse that bounds every relevant node a priori.
//! * [`analysis`]: path extraction, error metrics, dependency graphs and the
//!   sensitivity coefficients that quantify how much a restriction can cost.

pub mod analysis;
pub mod astar;
pub mod error;
pub mod fmm;
pub mod grid;
pub mod heuristics;
pub mod instances;
pub mod speed;

pub use error::{Error, Result};
pub use fmm::{ExitSet, Problem, SolverState, Stop};
pub use grid::{Bounds, Grid, NodeId};
pub use speed::{CostField, SpeedField};
