//! Post-processing: paths, metrics, dependency structure and restriction
//! error bounds.

pub mod metrics;
pub mod restriction;
pub mod sensitivity;
pub mod trajectory;

pub use metrics::{compute_metrics, write_reports, RunReport, CSV_COLUMNS};
pub use restriction::{
    grid_path_bound, outer_boundary, refine_in_tube, restricted_solve_with_boundary, restriction_error_bound, tube_around,
    Penalty,
};
pub use sensitivity::{
    conjecture_decay_fit, dependency_graph, sensitivity_alphas, transition_probabilities, DecayFit, DecayOptions,
    DependencyGraph, ProbeLine, SensitivityField,
};
pub use trajectory::{extract_trajectory, integrate_cost_along, Trajectory};
