//! Underestimates `phi` of the source-side value `v`, overestimates `psi`
//! and `Psi`, and the ellipse outside of which no node can matter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmm::{fmm_solve, ExitSet, Problem, SolverState, Stop};
use crate::grid::{euclid, Grid, NodeId};

#[derive(Clone, Debug)]
enum Kind {
    Zero,
    /// `|x - s| / F2`.
    Naive { s: Vec<f64>, f2: f64 },
    /// Value table on the solver grid.
    Table { values: Vec<f64> },
    /// Value table on a coarser grid, interpolated multilinearly.
    Coarse { grid: Grid, values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    Zero,
    Naive,
    Oracle,
    CoarseGrid,
    HigherSpeed,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::Zero => "zero",
            HeuristicKind::Naive => "naive",
            HeuristicKind::Oracle => "oracle",
            HeuristicKind::CoarseGrid => "coarse_grid",
            HeuristicKind::HigherSpeed => "higher_speed",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => HeuristicKind::Zero,
            "naive" => HeuristicKind::Naive,
            "oracle" => HeuristicKind::Oracle,
            "coarse_grid" => HeuristicKind::CoarseGrid,
            "higher_speed" => HeuristicKind::HigherSpeed,
            _ => return Err(Error::BadConfig(format!("unknown heuristic {s:?}"))),
        })
    }
}

/// A scaled underestimate `lambda * phi(x)` of the time from `s` to `x`.
#[derive(Clone, Debug)]
pub struct Heuristic {
    kind: Kind,
    label: HeuristicKind,
    lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::BadConfig(format!("lambda {lambda} outside [0, 1]")))
    }
}

impl Heuristic {
    pub fn zero() -> Self {
        Heuristic {
            kind: Kind::Zero,
            label: HeuristicKind::Zero,
            lambda: 0.0,
        }
    }

    pub fn naive(s: Vec<f64>, f2: f64, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(f2 > 0.0) {
            return Err(Error::BadSpeed(format!("F2 = {f2}")));
        }
        Ok(Heuristic {
            kind: Kind::Naive { s, f2 },
            label: HeuristicKind::Naive,
            lambda,
        })
    }

    /// `lambda * V` with `V` the full Fast Marching solution from `s`.
    pub fn oracle(problem: &Problem, s: NodeId, lambda: f64) -> Result<Self> {
        let v = fmm_solve(problem, &ExitSet::single(s), Stop::Full)?;
        Self::from_table(HeuristicKind::Oracle, v.u, problem.grid(), lambda)
    }

    /// `lambda * v0` with `v0` solved from `s` under a faster speed `f0 >= f`
    /// sampled on the same grid.
    pub fn higher_speed(faster: &Problem, s: NodeId, lambda: f64) -> Result<Self> {
        let v0 = fmm_solve(faster, &ExitSet::single(s), Stop::Full)?;
        Self::from_table(HeuristicKind::HigherSpeed, v0.u, faster.grid(), lambda)
    }

    /// Table-backed heuristic with one value per node of `grid`.
    pub fn from_table(label: HeuristicKind, values: Vec<f64>, grid: &Grid, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if values.is_empty() {
            return Err(Error::MissingTable);
        }
        if values.len() != grid.len() {
            return Err(Error::TableSize {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Heuristic {
            kind: Kind::Table { values },
            label,
            lambda,
        })
    }

    /// Loads a value table from a solver-state CSV export.
    pub fn from_csv(label: HeuristicKind, path: &Path, grid: &Grid, lambda: f64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let st = SolverState::read_csv(file, grid)?;
        Self::from_table(label, st.u, grid, lambda)
    }

    /// `lambda * V^R`, with `V^R` solved on a grid of `round(R m)` nodes per
    /// side from the coarse node nearest to `s`.
    pub fn coarse_grid(problem: &Problem, s: NodeId, ratio: f64, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::BadConfig(format!("coarse ratio {ratio} outside (0, 1]")));
        }
        let fine = problem.grid();
        let mc = ((ratio * fine.m() as f64).round() as usize).max(2);
        let coarse = Grid::new(fine.dim(), mc, Some(fine.bounds().clone()))?;
        let cp = Problem::new(coarse.clone(), problem.field().clone())?;
        let sc = coarse.locate(&fine.position(s), true)?;
        let v = fmm_solve(&cp, &ExitSet::single(sc), Stop::Full)?;
        Ok(Heuristic {
            kind: Kind::Coarse {
                grid: coarse,
                values: v.u,
            },
            label: HeuristicKind::CoarseGrid,
            lambda,
        })
    }

    pub fn kind(&self) -> HeuristicKind {
        self.label
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `phi` at an arbitrary point; table kinds interpolate multilinearly.
    pub fn eval(&self, x: &[f64], grid: &Grid) -> Result<f64> {
        if !grid.bounds().contains(x) {
            return Err(Error::OutsideBounds(x.to_vec()));
        }
        Ok(match &self.kind {
            Kind::Zero => 0.0,
            Kind::Naive { s, f2 } => self.lambda * euclid(s, x) / f2,
            Kind::Table { values } => self.lambda * interpolate(grid, values, x),
            Kind::Coarse { grid: cg, values } => self.lambda * interpolate(cg, values, x),
        })
    }

    /// `phi` at a node of `grid` (the grid the heuristic was built for).
    #[inline]
    pub fn eval_node(&self, grid: &Grid, node: NodeId) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Naive { s, f2 } => {
                let mut d2 = 0.0;
                for (a, sa) in s.iter().enumerate() {
                    let d = grid.coord(node, a) - sa;
                    d2 += d * d;
                }
                self.lambda * d2.sqrt() / f2
            }
            Kind::Table { values } => self.lambda * values[node.index()],
            Kind::Coarse { grid: cg, values } => {
                let mut x = [0.0; 3];
                for (a, xa) in x.iter_mut().enumerate().take(grid.dim()) {
                    *xa = grid.coord(node, a);
                }
                self.lambda * interpolate(cg, values, &x[..grid.dim()])
            }
        }
    }

    /// `phi` at every node of `grid`.
    pub fn table(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|n| self.eval_node(grid, NodeId(n as u32))).collect()
    }
}

/// Multilinear interpolation of a nodal table at `x` (clamped to the box).
pub fn interpolate(grid: &Grid, values: &[f64], x: &[f64]) -> f64 {
    let dim = grid.dim();
    let m = grid.m();
    let mut base = [0usize; 3];
    let mut w = [0.0f64; 3];
    for a in 0..dim {
        let r = ((x[a] - grid.bounds().min[a]) / grid.h()).clamp(0.0, (m - 1) as f64);
        let i = (r.floor() as usize).min(m - 2);
        base[a] = i;
        w[a] = r - i as f64;
    }
    let mut acc = 0.0;
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
        acc += weight * values[grid.node_at(&idx).index()];
    }
    acc
}

/// `psi(x) = |x - s| / F1`, an overestimate of the time from `s` to `x`.
pub fn eval_psi(x: &[f64], s: &[f64], f1: f64) -> f64 {
    euclid(x, s) / f1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Straight segment at the minimum speed.
    Psi1,
    /// Straight segment, exact travel time by quadrature.
    Psi2,
    /// Full-grid value at the source.
    Psi3,
    /// Cost integrated along an extracted trajectory.
    CustomPath,
    External,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Psi1 => "psi1",
            Provenance::Psi2 => "psi2",
            Provenance::Psi3 => "psi3",
            Provenance::CustomPath => "custom_path",
            Provenance::External => "external",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "psi1" => Provenance::Psi1,
            "psi2" => Provenance::Psi2,
            "psi3" => Provenance::Psi3,
            "custom_path" => Provenance::CustomPath,
            "external" => Provenance::External,
            _ => return Err(Error::BadConfig(format!("unknown overestimate {s:?}"))),
        })
    }
}

/// A scalar upper bound on `u(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overestimate {
    pub value: f64,
    pub provenance: Provenance,
}

/// `Psi1`, `Psi2` or `Psi3` for the pair `(s, t)`.
///
/// `Psi2` uses composite Simpson with `quadrature_n` intervals (default `4 m`)
/// and is inflated by ten times the estimated relative quadrature error so it
/// stays above the exact line integral; it never exceeds `Psi1`.
pub fn compute_psi(
    kind: Provenance,
    problem: &Problem,
    s: NodeId,
    t: NodeId,
    quadrature_n: Option<usize>,
) -> Result<Overestimate> {
    let grid = problem.grid();
    grid.check(s)?;
    grid.check(t)?;
    if s == t {
        return Err(Error::SourceIsTarget);
    }
    let (f1, _) = problem.speed_bounds();
    let xs = grid.position(s);
    let xt = grid.position(t);
    let d = euclid(&xs, &xt);
    let psi1 = d / f1;
    let value = match kind {
        Provenance::Psi1 => psi1,
        Provenance::Psi2 => {
            let n = quadrature_n.unwrap_or(4 * grid.m());
            let n = (n.max(4) + 1) & !1;
            let field = problem.field();
            let slowness = |r: f64| -> Result<f64> {
                let x: Vec<f64> = xs.iter().zip(&xt).map(|(a, b)| a + (b - a) * r).collect();
                let f = field.value(&x);
                if !(f > 0.0) {
                    return Err(Error::BadSpeed(format!("f = {f} at {x:?}")));
                }
                Ok(1.0 / f)
            };
            let s_n = d * simpson(&slowness, n)?;
            let s_half = d * simpson(&slowness, n / 2 + (n / 2) % 2)?;
            let rel = ((s_n - s_half) / s_n).abs();
            (s_n * (1.0 + 10.0 * rel)).min(psi1)
        }
        Provenance::Psi3 => fmm_solve(problem, &ExitSet::single(t), Stop::AtNode(s))?.value(s),
        Provenance::CustomPath | Provenance::External => {
            return Err(Error::BadConfig(format!(
                "{} overestimates are supplied by the caller",
                kind.as_str()
            )))
        }
    };
    Ok(Overestimate { value, provenance: kind })
}

fn simpson(g: &dyn Fn(f64) -> Result<f64>, n: usize) -> Result<f64> {
    let h = 1.0 / n as f64;
    let mut acc = g(0.0)? + g(1.0)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(k as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

fn ellipse_check(s: &[f64], t: &[f64], f2: f64, psi: f64) -> Result<f64> {
    let d = euclid(s, t);
    let reach = f2 * psi;
    if reach < d * (1.0 - 1e-12) {
        return Err(Error::EmptyEllipse { psi, bound: d / f2 });
    }
    Ok(reach)
}

/// `|x - s| + |x - t| <= F2 Psi`.
pub fn ellipse_contains(x: &[f64], s: &[f64], t: &[f64], f2: f64, psi: f64) -> Result<bool> {
    let reach = ellipse_check(s, t, f2, psi)?;
    Ok(euclid(x, s) + euclid(x, t) <= reach * (1.0 + 1e-12))
}

/// Major and minor semi-axes `(F2 Psi / 2, sqrt(F2^2 Psi^2 - d^2) / 2)`.
pub fn ellipse_axes(s: &[f64], t: &[f64], f2: f64, psi: f64) -> Result<(f64, f64)> {
    let reach = ellipse_check(s, t, f2, psi)?;
    let d = euclid(s, t);
    Ok((reach / 2.0, 0.5 * (reach * reach - d * d).max(0.0).sqrt()))
}

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    let (mut x, mut g) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit `n`-ball over that of its bounding cube.
pub fn ellipse_volume_fraction(n: u32) -> f64 {
    let n = n.max(1);
    std::f64::consts::PI.powf(n as f64 / 2.0) / (2f64.powi(n as i32) * gamma_half(n + 2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// Largest `|phi_i - phi_j| - lambda_required |x_i - x_j|` over neighbour pairs.
    pub max_violation: f64,
    pub violations: usize,
    /// Largest observed `|phi_i - phi_j| / |x_i - x_j|`.
    pub lipschitz: f64,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `|phi(x_i) - phi(x_j)| <= lambda_required |x_i - x_j|` over every
/// pair of lattice neighbours.
pub fn check_consistency(hr: &Heuristic, grid: &Grid, lambda_required: f64) -> ConsistencyReport {
    let phi = hr.table(grid);
    let h = grid.h();
    let mut rep = ConsistencyReport {
        max_violation: f64::NEG_INFINITY,
        violations: 0,
        lipschitz: 0.0,
    };
    for n in 0..grid.len() {
        let a = NodeId(n as u32);
        for axis in 0..grid.dim() {
            if let Some(b) = grid.axis_neighbors(a, axis)[1] {
                let diff = (phi[a.index()] - phi[b.index()]).abs();
                let excess = diff - lambda_required * h;
                rep.lipschitz = rep.lipschitz.max(diff / h);
                rep.max_violation = rep.max_violation.max(excess);
                if excess > 1e-14 * (1.0 + diff) {
                    rep.violations += 1;
                }
            }
        }
    }
    rep
}
