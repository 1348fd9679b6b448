use thiserror::Error;

use crate::grid::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported grid dimension {0} (expected 2 or 3)")]
    BadDimension(usize),
    #[error("grid needs at least 2 nodes per side, got {0}")]
    TooFewNodes(usize),
    #[error("invalid bounds: {0}")]
    BadBounds(String),
    #[error("node index {0} out of range for a grid of {1} nodes")]
    NodeOutOfRange(usize, usize),
    #[error("point {0:?} lies outside the grid bounds")]
    OutsideBounds(Vec<f64>),
    #[error("point {0:?} is not a lattice point (set snap to round to the nearest node)")]
    OffLattice(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid speed field: {0}")]
    BadSpeed(String),
    #[error("intensity matrix is empty or ragged")]
    EmptyMatrix,
    #[error("intensity {value} at row {row}, column {col} is outside [0, 755]")]
    IntensityOutOfRange { row: usize, col: usize, value: f64 },
    #[error("running cost must be positive, found {value} at {at:?}")]
    NonPositiveCost { value: f64, at: Vec<f64> },

    #[error("local update needs at least one finite upwind value")]
    NoUpwindValue,
    #[error("exit set is empty")]
    EmptyExitSet,
    #[error("exit penalty must be >= 0 or +inf, got {0}")]
    BadPenalty(f64),
    #[error("node {0} was never accepted")]
    Unreached(NodeId),
    #[error("source and target coincide")]
    SourceIsTarget,

    #[error("heuristic is missing its value table")]
    MissingTable,
    #[error("value table has {got} entries, grid has {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("overestimate {psi} is below the distance bound {bound}: the ellipse is empty")]
    EmptyEllipse { psi: f64, bound: f64 },
    #[error("overestimate {psi} is below the heuristic value {phi} at the target")]
    InvalidOverestimate { psi: f64, phi: f64 },
    #[error("invalid restriction config: {0}")]
    BadConfig(String),

    #[error("trajectory did not reach the target within {0} steps")]
    TrajectoryTrapped(usize),
    #[error("gradient is undefined at {0:?}")]
    NanGradient(Vec<f64>),
    #[error("integrand must be positive along the path, found {0}")]
    NonPositiveIntegrand(f64),
    #[error("reference value must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("solver state carries no upwind record for node {0}")]
    MissingUpwindRecord(NodeId),
    #[error("too few usable probe points for a decay fit ({0} < 5)")]
    TooFewProbePoints(usize),
    #[error("exit penalty {q} is below the unrestricted value {u} at node {node}; bound does not apply")]
    PenaltyBelowValue { node: NodeId, q: f64, u: f64 },
    #[error("target is not inside the restricted node set")]
    TargetOutsideRestriction,

    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
