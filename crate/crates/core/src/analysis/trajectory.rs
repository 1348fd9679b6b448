//! Gradient-descent path extraction and cost integration.

use crate::error::{Error, Result};
use crate::grid::{euclid, Grid, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// From `s` to `t`; the last point is `t` itself.
    pub points: Vec<Vec<f64>>,
    pub arclength: f64,
}

impl Trajectory {
    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        let arclength = points.windows(2).map(|w| euclid(&w[0], &w[1])).sum();
        Trajectory { points, arclength }
    }

    /// Distance from `x` to the polyline.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        if self.points.len() == 1 {
            return euclid(x, &self.points[0]);
        }
        self.points
            .windows(2)
            .map(|w| segment_distance(x, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Point and unit tangent at fraction `r` of the arclength.
    pub fn at_fraction(&self, r: f64) -> (Vec<f64>, Vec<f64>) {
        let goal = r.clamp(0.0, 1.0) * self.arclength;
        let mut acc = 0.0;
        for w in self.points.windows(2) {
            let len = euclid(&w[0], &w[1]);
            if len > 0.0 && (acc + len >= goal) {
                let a = (goal - acc) / len;
                let p = w[0].iter().zip(&w[1]).map(|(x, y)| x + a * (y - x)).collect();
                let tan = w[0].iter().zip(&w[1]).map(|(x, y)| (y - x) / len).collect();
                return (p, tan);
            }
            acc += len;
        }
        let n = self.points.len();
        let last = self.points[n - 1].clone();
        let prev = &self.points[n.saturating_sub(2)];
        let len = euclid(prev, &last).max(f64::MIN_POSITIVE);
        let tan = prev.iter().zip(&last).map(|(x, y)| (y - x) / len).collect();
        (last, tan)
    }

    /// Hausdorff distance between two polylines, measured vertex-to-polyline
    /// both ways.
    pub fn hausdorff(&self, other: &Trajectory) -> f64 {
        let a = self.points.iter().map(|p| other.distance_to(p)).fold(0.0, f64::max);
        let b = other.points.iter().map(|p| self.distance_to(p)).fold(0.0, f64::max);
        a.max(b)
    }
}

pub(crate) fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..x.len() {
        let d = b[k] - a[k];
        ab2 += d * d;
        dot += (x[k] - a[k]) * d;
    }
    let r = if ab2 > 0.0 { (dot / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for k in 0..x.len() {
        let p = a[k] + r * (b[k] - a[k]);
        d2 += (x[k] - p) * (x[k] - p);
    }
    d2.sqrt()
}

/// Upwind one-sided gradient of `u` at a lattice node: along each axis the
/// difference towards the smaller finite neighbour, zero if neither is
/// smaller.
fn nodal_gradient(grid: &Grid, u: &[f64], node: NodeId) -> Option<[f64; 3]> {
    let here = u[node.index()];
    if !here.is_finite() {
        return None;
    }
    let h = grid.h();
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
        let [lo, hi] = grid.axis_neighbors(node, a);
        let vlo = lo.map_or(f64::INFINITY, |n| u[n.index()]);
        let vhi = hi.map_or(f64::INFINITY, |n| u[n.index()]);
        if vlo < here && vlo <= vhi {
            *ga = (here - vlo) / h;
        } else if vhi < here {
            *ga = (vhi - here) / h;
        }
    }
    Some(g)
}

/// Multilinear blend of the nodal gradients at the corners of the cell
/// containing `x`. Corners without a finite value are skipped.
fn gradient_at(grid: &Grid, u: &[f64], x: &[f64]) -> Option<[f64; 3]> {
    let dim = grid.dim();
    let m = grid.m();
    let mut base = [0usize; 3];
    let mut w = [0.0; 3];
    for a in 0..dim {
        let r = ((x[a] - grid.bounds().min[a]) / grid.h()).clamp(0.0, (m - 1) as f64);
        let i = (r.floor() as usize).min(m - 2);
        base[a] = i;
        w[a] = r - i as f64;
    }
    let mut g = [0.0; 3];
    let mut wsum = 0.0;
    for corner in 0..(1usize << dim) {
        let mut idx = [0usize; 3];
        let mut weight = 1.0;
        for a in 0..dim {
            let bit = (corner >> a) & 1;
            idx[a] = base[a] + bit;
            weight *= if bit == 1 { w[a] } else { 1.0 - w[a] };
        }
        if weight == 0.0 {
            continue;
        }
        if let Some(gc) = nodal_gradient(grid, u, grid.node_at(&idx)) {
            for a in 0..dim {
                g[a] += weight * gc[a];
            }
            wsum += weight;
        }
    }
    if wsum == 0.0 {
        return None;
    }
    for ga in g.iter_mut().take(dim) {
        *ga /= wsum;
    }
    Some(g)
}

/// Descends `-grad U` from `s` in steps of `step` (default `h/2`) until
/// within `h` of `t`, then appends `t`.
pub fn extract_trajectory(
    u: &[f64],
    grid: &Grid,
    s: &[f64],
    t: &[f64],
    step: Option<f64>,
    max_steps: Option<usize>,
) -> Result<Trajectory> {
    let dim = grid.dim();
    if u.len() != grid.len() {
        return Err(Error::TableSize {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let h = grid.h();
    let step = step.unwrap_or(h / 2.0);
    let max_steps = max_steps.unwrap_or(20 * grid.m() * dim);
    let mut x = s.to_vec();
    let mut pts = vec![x.clone()];
    let lo = &grid.bounds().min;
    let side = grid.bounds().side;
    for _ in 0..max_steps {
        if euclid(&x, t) <= h {
            pts.push(t.to_vec());
            return Ok(Trajectory::from_points(pts));
        }
        let g = gradient_at(grid, u, &x).ok_or_else(|| Error::NanGradient(x.clone()))?;
        let norm = g[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NanGradient(x.clone()));
        }
        for a in 0..dim {
            x[a] = (x[a] - step * g[a] / norm).clamp(lo[a], lo[a] + side);
        }
        pts.push(x.clone());
    }
    Err(Error::TrajectoryTrapped(max_steps))
}

/// Composite trapezoid rule for `integrand` along the polyline.
pub fn integrate_cost_along(traj: &Trajectory, integrand: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    let mut prev = None;
    let mut total = 0.0;
    for p in &traj.points {
        let g = integrand(p);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::NonPositiveIntegrand(g));
        }
        if let Some((q, gq)) = prev {
            total += euclid(q, p) * 0.5 * (g + gq);
        }
        prev = Some((p.as_slice(), g));
    }
    Ok(total)
}
