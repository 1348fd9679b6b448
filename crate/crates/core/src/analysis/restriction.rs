//! Solves on a subset of the grid and a-posteriori bounds on what the
//! restriction can cost at the source.

use std::collections::VecDeque;

use crate::analysis::trajectory::{extract_trajectory, Trajectory};
use crate::error::{Error, Result};
use crate::fmm::{fmm_solve_in, ExitSet, Problem, SolverState, Stop};
use crate::grid::{Grid, NodeId};

/// Nodes outside `inside` with at least one neighbour inside.
pub fn outer_boundary(grid: &Grid, inside: &[bool]) -> Vec<NodeId> {
    (0..grid.len())
        .map(|n| NodeId(n as u32))
        .filter(|&x| !inside[x.index()] && grid.neighbors_iter(x).any(|y| inside[y.index()]))
        .collect()
}

/// Fast Marching on `inside` plus its outer boundary, with `t` (inside)
/// as a zero-penalty exit and every boundary node `x` as an exit with
/// penalty `q(x)` (`+inf` blocks it).
pub fn restricted_solve_with_boundary(
    problem: &Problem,
    t: NodeId,
    inside: &[bool],
    q: &dyn Fn(NodeId) -> f64,
) -> Result<SolverState> {
    let grid = problem.grid();
    grid.check(t)?;
    if inside.len() != grid.len() {
        return Err(Error::TableSize {
            expected: grid.len(),
            got: inside.len(),
        });
    }
    if !inside[t.index()] {
        return Err(Error::TargetOutsideRestriction);
    }
    let mut exits = ExitSet::single(t);
    for x in outer_boundary(grid, inside) {
        exits.push(x, q(x))?;
    }
    fmm_solve_in(problem, Some(inside), &exits, Stop::Full)
}

/// Longest shortest grid-aligned path (in length units) from any node of
/// `inside` to `t` while staying inside; `+inf` if some node is cut off.
pub fn grid_path_bound(grid: &Grid, inside: &[bool], t: NodeId) -> f64 {
    let mut hops = vec![usize::MAX; grid.len()];
    let mut queue = VecDeque::from([t]);
    hops[t.index()] = 0;
    while let Some(x) = queue.pop_front() {
        for y in grid.neighbors_iter(x) {
            if inside[y.index()] && hops[y.index()] == usize::MAX {
                hops[y.index()] = hops[x.index()] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut worst = 0;
    for (i, &inn) in inside.iter().enumerate() {
        if inn {
            if hops[i] == usize::MAX {
                return f64::INFINITY;
            }
            worst = worst.max(hops[i]);
        }
    }
    worst as f64 * grid.h()
}

/// Nodes within `width` of `path`.
pub fn tube_around(grid: &Grid, path: &Trajectory, width: f64) -> Vec<bool> {
    (0..grid.len())
        .map(|n| path.distance_to(&grid.position(NodeId(n as u32))) <= width)
        .collect()
}

/// A locally optimal path near `guide`: FMM confined to a tube around the
/// guide, then gradient descent from `s`. Any path's cost is a valid
/// overestimate, so integrating along the result gives a tighter `Psi`
/// than integrating along the guide itself when the guide is only
/// optimal for a related speed.
pub fn refine_in_tube(problem: &Problem, s: NodeId, t: NodeId, guide: &Trajectory, width: f64) -> Result<Trajectory> {
    let grid = problem.grid();
    let tube = tube_around(grid, guide, width);
    if !tube[s.index()] {
        return Err(Error::OutsideBounds(grid.position(s)));
    }
    let st = fmm_solve_in(problem, Some(&tube), &ExitSet::single(t), Stop::Full)?;
    extract_trajectory(&st.u, grid, &grid.position(s), &grid.position(t), None, None)
}

/// What each boundary node is charged in the bound.
pub enum Penalty<'a> {
    /// Per-node exit penalties `q(x) >= U(x)`.
    Exit(&'a dyn Fn(NodeId) -> f64),
    /// A constant `C >= max Uhat` on the restricted set.
    Constant(f64),
}

/// Upper bound on the increase of `U(s)` caused by the restriction:
/// `sum alpha (q - U)` over the boundary, or `C sum alpha`.
pub fn restriction_error_bound(alpha: &[f64], xi: &[NodeId], penalty: Penalty<'_>, u: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &x in xi {
        let a = alpha[x.index()];
        match &penalty {
            Penalty::Exit(q) => {
                let (qx, ux) = (q(x), u[x.index()]);
                if qx < ux {
                    return Err(Error::PenaltyBelowValue { node: x, q: qx, u: ux });
                }
                if a > 0.0 {
                    total += a * (qx - ux);
                }
            }
            Penalty::Constant(c) => total += c * a,
        }
    }
    Ok(total)
}
