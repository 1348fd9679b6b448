//! Dependency graphs and sensitivity coefficients.
//!
//! Each quadratic update is the optimality condition of a semi-Lagrangian
//! scheme that moves from `x` to a convex combination of its upwind parents.
//! Reading those weights as transition probabilities turns the recorded
//! parents into a Markov chain that ends at the exits. `alpha(x)` is the
//! probability that a walk started at `s` passes through `x`, which is also
//! `dU(s)/dU(x)`.

use crate::analysis::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::fmm::{Branch, SolverState};
use crate::grid::{Grid, NodeId};

/// Nodes that `U(s)` depends on, directly or indirectly.
#[derive(Clone, Debug)]
pub struct DependencyGraph {
    pub source: NodeId,
    pub members: Vec<bool>,
}

impl DependencyGraph {
    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: NodeId) -> bool {
        self.members[x.index()]
    }
}

/// Follows recorded upwind parents from `s`.
pub fn dependency_graph(state: &SolverState, s: NodeId) -> Result<DependencyGraph> {
    state.grid.check(s)?;
    if !state.is_accepted(s) {
        return Err(Error::Unreached(s));
    }
    let mut members = vec![false; state.u.len()];
    let mut stack = vec![s];
    members[s.index()] = true;
    while let Some(x) = stack.pop() {
        let rec = state.record(x);
        if rec.branch().is_none() {
            return Err(Error::MissingUpwindRecord(x));
        }
        for &p in rec.parents() {
            if !members[p.index()] {
                members[p.index()] = true;
                stack.push(p);
            }
        }
    }
    Ok(DependencyGraph { source: s, members })
}

/// Transition probabilities from `x` to its recorded parents, proportional
/// to `U(x) - U(parent)`.
pub fn transition_probabilities(state: &SolverState, x: NodeId) -> Vec<(NodeId, f64)> {
    let u = state.value(x);
    let parents = state.record(x).parents();
    if parents.len() == 1 {
        return vec![(parents[0], 1.0)];
    }
    let w: Vec<f64> = parents.iter().map(|&p| u - state.value(p)).collect();
    let total: f64 = w.iter().sum();
    parents.iter().zip(w).map(|(&p, wi)| (p, wi / total)).collect()
}

#[derive(Clone, Debug)]
pub struct SensitivityField {
    pub alpha: Vec<f64>,
    /// Per node, the transition probabilities aligned with its recorded
    /// parents (empty for exits and untouched nodes).
    pub beta_star: Vec<Vec<f64>>,
    /// Mass that ended on exit nodes.
    pub exit_mass: f64,
    /// Mass stopped at absorbing nodes.
    pub absorbed_mass: f64,
}

/// Forward push of unit mass from `s` in decreasing acceptance order.
/// Nodes flagged in `absorbing` keep their mass instead of passing it on.
pub fn sensitivity_alphas(state: &SolverState, s: NodeId, absorbing: Option<&[bool]>) -> Result<SensitivityField> {
    let graph = dependency_graph(state, s)?;
    let n = state.u.len();
    let mut alpha = vec![0.0; n];
    let mut beta_star = vec![Vec::new(); n];
    alpha[s.index()] = 1.0;
    let mut exit_mass = 0.0;
    let mut absorbed_mass = 0.0;
    let top = state.rank(s).expect("accepted") as usize;
    for &x in state.order[..=top].iter().rev() {
        let i = x.index();
        if !graph.members[i] {
            continue;
        }
        if state.record(x).branch() == Some(Branch::Exit) {
            exit_mass += alpha[i];
            continue;
        }
        let probs = transition_probabilities(state, x);
        beta_star[i] = probs.iter().map(|p| p.1).collect();
        if x != s && absorbing.is_some_and(|a| a[i]) {
            absorbed_mass += alpha[i];
            continue;
        }
        let a = alpha[i];
        if a == 0.0 {
            continue;
        }
        for (p, w) in probs {
            alpha[p.index()] += a * w;
        }
    }
    Ok(SensitivityField {
        alpha,
        beta_star,
        exit_mass,
        absorbed_mass,
    })
}

#[derive(Clone, Debug)]
pub struct ProbeLine {
    pub arc_fraction: f64,
    /// `+1` or `-1`: which side of the trajectory.
    pub side: i8,
    /// `(distance to trajectory, alpha)` ordered by distance.
    pub samples: Vec<(f64, f64)>,
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    /// Slope of `ln alpha` against `d^2 / h`.
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    pub probes: Vec<ProbeLine>,
}

impl DecayFit {
    pub fn all_monotone(&self) -> bool {
        self.probes.iter().all(|p| p.monotone)
    }
}

#[derive(Clone, Debug)]
pub struct DecayOptions {
    pub arc_fractions: Vec<f64>,
    /// Largest probe depth, in grid spacings.
    pub depth: usize,
    /// Samples with `alpha` below this are left out of the fit.
    pub floor: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            arc_fractions: vec![0.3, 0.5, 0.7],
            depth: 200,
            floor: 1e-250,
        }
    }
}

/// Samples `alpha` along lines perpendicular to a 2D trajectory (spacing
/// `h`, nearest node) and regresses `ln alpha` against `d^2 / h`.
pub fn conjecture_decay_fit(
    alpha: &[f64],
    grid: &Grid,
    trajectory: &Trajectory,
    h: f64,
    opts: &DecayOptions,
) -> Result<DecayFit> {
    if grid.dim() != 2 {
        return Err(Error::BadDimension(grid.dim()));
    }
    let mut probes = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in &opts.arc_fractions {
        let (p, tan) = trajectory.at_fraction(r);
        let normal = [-tan[1], tan[0]];
        for side in [1i8, -1] {
            let mut seen = Vec::new();
            let mut samples = Vec::new();
            for k in 0..=opts.depth {
                let off = side as f64 * k as f64 * h;
                let q = [p[0] + off * normal[0], p[1] + off * normal[1]];
                if !grid.bounds().contains(&q) {
                    break;
                }
                let node = grid.locate(&q, true)?;
                if seen.contains(&node) {
                    continue;
                }
                seen.push(node);
                let a = alpha[node.index()];
                let d = trajectory.distance_to(&grid.position(node));
                samples.push((d, a));
                if a < opts.floor {
                    break;
                }
            }
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            let monotone = samples
                .windows(2)
                .all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) || w[1].0 - w[0].0 < 1e-12);
            for &(d, a) in &samples {
                if a >= opts.floor {
                    xs.push(d * d / h);
                    ys.push(a.ln());
                }
            }
            probes.push(ProbeLine {
                arc_fraction: r,
                side,
                samples,
                monotone,
            });
        }
    }
    if xs.len() < 5 {
        return Err(Error::TooFewProbePoints(xs.len()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        points: xs.len(),
        probes,
    })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
