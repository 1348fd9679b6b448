//! Independent reference computations shared by the integration tests and
//! the acceptance runner. Nothing here calls into the solver internals.

#![allow(dead_code)]

use eikonal_astar::fmm::SolverState;
use eikonal_astar::grid::{Grid, NodeId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Direct minimisation over `beta` in [0, 1] of
/// `h sqrt(b^2 + (1-b)^2) / f + b u_h + (1-b) u_v`
/// (the semi-Lagrangian form of the two-neighbour update).
/// The objective is convex, so a dense scan followed by ternary search is
/// enough.
pub fn semi_lagrangian_min(u_h: f64, u_v: f64, h: f64, f: f64) -> f64 {
    let cost = |b: f64| h * (b * b + (1.0 - b) * (1.0 - b)).sqrt() / f + b * u_h + (1.0 - b) * u_v;
    let n = 2000;
    let mut best = 0;
    for k in 1..=n {
        if cost(k as f64 / n as f64) < cost(best as f64 / n as f64) {
            best = k;
        }
    }
    let mut lo = (best as f64 - 1.0).max(0.0) / n as f64;
    let mut hi = (best as f64 + 1.0).min(n as f64) / n as f64;
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if cost(a) <= cost(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mid = 0.5 * (lo + hi);
    cost(mid).min(cost(0.0)).min(cost(1.0))
}

/// Gauss-Seidel sweeping on the same upwind system, in 2D. Converges to
/// the unique discrete solution, so it must agree with any correct
/// label-setting solver.
pub fn sweep_solve_2d(grid: &Grid, f: &[f64], t: NodeId) -> Vec<f64> {
    assert_eq!(grid.dim(), 2);
    let m = grid.m();
    let h = grid.h();
    let mut u = vec![f64::INFINITY; grid.len()];
    u[t.index()] = 0.0;
    let orders: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];
    loop {
        let mut change: f64 = 0.0;
        for &(ri, rj) in &orders {
            for a in 0..m {
                let i = if ri { m - 1 - a } else { a };
                for b in 0..m {
                    let j = if rj { m - 1 - b } else { b };
                    let x = grid.node_at(&[i, j]);
                    if x == t {
                        continue;
                    }
                    let pick = |ii: Option<usize>, jj: Option<usize>| match (ii, jj) {
                        (Some(ii), Some(jj)) if ii < m && jj < m => u[grid.node_at(&[ii, jj]).index()],
                        _ => f64::INFINITY,
                    };
                    let a0 = pick(i.checked_sub(1), Some(j)).min(pick(Some(i + 1), Some(j)));
                    let b0 = pick(Some(i), j.checked_sub(1)).min(pick(Some(i), Some(j + 1)));
                    let r = h / f[x.index()];
                    let (lo, hi) = if a0 < b0 { (a0, b0) } else { (b0, a0) };
                    if lo.is_infinite() {
                        continue;
                    }
                    let cand = if hi - lo >= r {
                        lo + r
                    } else {
                        0.5 * (lo + hi + (2.0 * r * r - (hi - lo) * (hi - lo)).sqrt())
                    };
                    if cand < u[x.index()] {
                        change = change.max(if u[x.index()].is_finite() { u[x.index()] - cand } else { 1.0 });
                        u[x.index()] = cand;
                    }
                }
            }
        }
        if change < 1e-15 {
            return u;
        }
    }
}

/// Seeded random walks from `s` that move to a recorded upwind parent with
/// probability proportional to `U(x) - U(parent)`, stopping at exits.
/// Returns how many walks passed through each node.
pub fn monte_carlo_visits(state: &SolverState, s: NodeId, walks: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut visits = vec![0u64; state.u.len()];
    for _ in 0..walks {
        let mut x = s;
        loop {
            visits[x.index()] += 1;
            let parents = state.record(x).parents();
            if parents.is_empty() {
                break;
            }
            x = if parents.len() == 1 {
                parents[0]
            } else {
                let ux = state.u[x.index()];
                let w: Vec<f64> = parents.iter().map(|p| ux - state.u[p.index()]).collect();
                let total: f64 = w.iter().sum();
                let mut r = rng.gen::<f64>() * total;
                let mut pick = parents[parents.len() - 1];
                for (p, wi) in parents.iter().zip(&w) {
                    if r < *wi {
                        pick = *p;
                        break;
                    }
                    r -= wi;
                }
                pick
            };
        }
    }
    visits
}

/// A random connected sub-domain containing `s` and `t`: a tube of random
/// half-width around the polyline `s -> w -> t` through a random waypoint.
pub fn random_truncation(grid: &Grid, s: NodeId, t: NodeId, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let ps = grid.position(s);
    let pt = grid.position(t);
    let w: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(0.1..0.9)).collect();
    let width = rng.gen_range(0.04..0.2);
    (0..grid.len())
        .map(|n| {
            let x = grid.position(NodeId(n as u32));
            seg_dist(&x, &ps, &w).min(seg_dist(&x, &w, &pt)) <= width
        })
        .collect()
}

fn seg_dist(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let r = if len2 == 0.0 {
        0.0
    } else {
        (x.iter().zip(a).zip(&ab).map(|((xi, ai), d)| (xi - ai) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
    };
    x.iter()
        .zip(a)
        .zip(&ab)
        .map(|((xi, ai), d)| (xi - ai - r * d).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
