use crate::error::{Error, Result};
use crate::fmm::march::{Marcher, Phi};
use crate::fmm::state::{Branch, ExitSet, Label, SolverState};
use crate::fmm::update::residual;
use crate::grid::{Grid, NodeId};
use crate::speed::SpeedField;

/// A grid together with the speed sampled once per node.
#[derive(Clone, Debug)]
pub struct Problem {
    grid: Grid,
    field: SpeedField,
    f: Vec<f64>,
}

impl Problem {
    pub fn new(grid: Grid, field: SpeedField) -> Result<Self> {
        let f = field.sample(&grid)?;
        Ok(Problem { grid, field, f })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn field(&self) -> &SpeedField {
        &self.field
    }

    /// Per-node speed samples.
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// `(F1, F2)` of the underlying field.
    pub fn speed_bounds(&self) -> (f64, f64) {
        self.field.bounds()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Full,
    AtNode(NodeId),
}

/// Fast Marching from `exits`.
pub fn fmm_solve(problem: &Problem, exits: &ExitSet, stop: Stop) -> Result<SolverState> {
    fmm_solve_in(problem, None, exits, stop)
}

/// Fast Marching restricted to the nodes flagged in `domain` (plus exits).
pub fn fmm_solve_in(problem: &Problem, domain: Option<&[bool]>, exits: &ExitSet, stop: Stop) -> Result<SolverState> {
    let target = match stop {
        Stop::Full => None,
        Stop::AtNode(s) => {
            problem.grid().check(s)?;
            Some(s)
        }
    };
    let mut m = Marcher::new(problem, domain, exits, Phi::Zero)?;
    let hit = m.run(target);
    if let Some(s) = target {
        if hit != Some(s) {
            return Err(Error::Unreached(s));
        }
    }
    Ok(m.into_state())
}

/// Result of a two-front solve.
#[derive(Clone, Debug)]
pub struct Bidirectional {
    pub meeting: NodeId,
    /// `u(meeting) + v(meeting)`.
    pub value: f64,
    /// Front grown from the target (computes `u`).
    pub from_t: SolverState,
    /// Front grown from the source (computes `v`).
    pub from_s: SolverState,
}

impl Bidirectional {
    pub fn accepted_total(&self) -> usize {
        self.from_t.accepted_count() + self.from_s.accepted_count()
    }
}

/// Grows fronts from `t` and `s` in strict alternation and stops at the first
/// node accepted by both.
pub fn bidirectional_solve(problem: &Problem, s: NodeId, t: NodeId) -> Result<Bidirectional> {
    let grid = problem.grid();
    grid.check(s)?;
    grid.check(t)?;
    if s == t {
        return Err(Error::SourceIsTarget);
    }
    let ex_t = ExitSet::single(t);
    let ex_s = ExitSet::single(s);
    let mut a = Marcher::new(problem, None, &ex_t, Phi::Zero)?;
    let mut b = Marcher::new(problem, None, &ex_s, Phi::Zero)?;
    let mut turn_a = true;
    loop {
        let (this, other) = if turn_a { (&mut a, &b) } else { (&mut b, &a) };
        turn_a = !turn_a;
        let Some(x) = this.pop() else {
            if a.queue_len() == 0 && b.queue_len() == 0 {
                return Err(Error::Unreached(s));
            }
            continue;
        };
        if other.state.is_accepted(x) {
            let value = a.state.value(x) + b.state.value(x);
            return Ok(Bidirectional {
                meeting: x,
                value,
                from_t: a.into_state(),
                from_s: b.into_state(),
            });
        }
        this.relax(x, |_, _| true);
    }
}

/// Largest residual of the discrete equation over accepted non-exit nodes,
/// in units of `h/f`, recomputed from the recorded parents' final values.
pub fn max_residual(state: &SolverState, problem: &Problem) -> f64 {
    let h = problem.grid().h();
    let mut worst: f64 = 0.0;
    for &x in &state.order {
        let rec = state.record(x);
        if rec.branch() == Some(Branch::Exit) {
            continue;
        }
        let f = problem.f()[x.index()];
        let used = state.parent_values(x);
        if used.is_empty() {
            return f64::INFINITY;
        }
        worst = worst.max(residual(state.value(x), &used, h, f) / (h / f));
    }
    worst
}

/// Whether every accepted node's recorded parents are accepted with strictly
/// smaller values.
pub fn is_causal(state: &SolverState) -> bool {
    state.order.iter().all(|&x| {
        let u = state.value(x);
        state
            .record(x)
            .parents()
            .iter()
            .all(|&p| state.label[p.index()] == Label::Accepted && state.value(p) < u && state.rank(p) < state.rank(x))
    })
}

/// Whether values are nondecreasing along the acceptance order.
pub fn is_monotone(state: &SolverState) -> bool {
    state.order.windows(2).all(|w| state.value(w[0]) <= state.value(w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn unit(m: usize) -> Problem {
        Problem::new(Grid::new(2, m, None).unwrap(), SpeedField::constant(1.0).unwrap()).unwrap()
    }

    #[test]
    fn neighbour_of_exit_gets_h() {
        let p = unit(11);
        let g = p.grid();
        let t = g.node_at(&[5, 5]);
        let st = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
        let nb = g.node_at(&[5, 6]);
        assert!((st.value(nb) - g.h()).abs() < 1e-15);
        assert_eq!(st.record(nb).parents(), &[t]);
        assert_eq!(st.accepted_count(), g.len());
    }

    #[test]
    fn corner_error_small() {
        let p = unit(101);
        let g = p.grid();
        let t = g.node_at(&[0, 0]);
        let s = g.node_at(&[100, 100]);
        let st = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
        let exact = 2f64.sqrt();
        assert!((st.value(s) - exact) / exact < 0.02);
        assert!(max_residual(&st, &p) <= 1e-10);
        assert!(is_causal(&st) && is_monotone(&st));
    }

    #[test]
    fn stop_at_source_matches_full() {
        let p = Problem::new(Grid::new(2, 61, None).unwrap(), SpeedField::oscillatory_2d()).unwrap();
        let g = p.grid();
        let t = g.node_at(&[30, 30]);
        let s = g.node_at(&[57, 42]);
        let full = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
        let part = fmm_solve(&p, &ExitSet::single(t), Stop::AtNode(s)).unwrap();
        assert_eq!(full.value(s), part.value(s));
        assert_eq!(&full.order[..part.order.len()], &part.order[..]);
        assert_eq!(*part.order.last().unwrap(), s);
    }

    #[test]
    fn blocked_exit_is_never_entered() {
        let p = unit(5);
        let g = p.grid();
        let t = g.node_at(&[0, 0]);
        let wall = g.node_at(&[1, 0]);
        let ex = ExitSet::new(vec![(t, 0.0), (wall, f64::INFINITY)]).unwrap();
        let st = fmm_solve(&p, &ex, Stop::Full).unwrap();
        assert!(st.value(wall).is_infinite());
        assert_eq!(st.accepted_count(), g.len() - 1);
    }

    #[test]
    fn unreachable_source() {
        let p = unit(5);
        let g = p.grid();
        let t = g.node_at(&[0, 0]);
        let ex = ExitSet::new(vec![
            (t, 0.0),
            (g.node_at(&[1, 0]), f64::INFINITY),
            (g.node_at(&[0, 1]), f64::INFINITY),
        ])
        .unwrap();
        let r = fmm_solve(&p, &ex, Stop::AtNode(g.node_at(&[4, 4])));
        assert!(matches!(r, Err(Error::Unreached(_))));
    }

    #[test]
    fn bidirectional_meets_above_full_value() {
        for m in [51, 101, 201] {
            let p = unit(m);
            let g = p.grid();
            let t = g.node_at(&[0, 0]);
            let s = g.node_at(&[m - 1, m - 1]);
            let full = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
            let bi = bidirectional_solve(&p, s, t).unwrap();
            assert!(bi.value >= full.value(s) - 1e-12);
            assert!(bi.value - full.value(s) < 0.05);
            assert!(bi.accepted_total() < g.len());
        }
        let p = unit(11);
        let t = p.grid().node_at(&[0, 0]);
        assert!(matches!(bidirectional_solve(&p, t, t), Err(Error::SourceIsTarget)));
    }

    #[test]
    fn exits_keep_their_penalties() {
        let p = unit(21);
        let g = p.grid();
        let a = g.node_at(&[0, 0]);
        let b = g.node_at(&[20, 20]);
        let ex = ExitSet::new(vec![(a, 0.0), (b, 0.3)]).unwrap();
        let st = fmm_solve(&p, &ex, Stop::Full).unwrap();
        assert_eq!(st.value(b), 0.3);
        assert_eq!(st.value(a), 0.0);
    }

    #[test]
    fn three_d_sweep() {
        let p = Problem::new(Grid::new(3, 21, None).unwrap(), SpeedField::constant(1.0).unwrap()).unwrap();
        let g = p.grid();
        let t = g.node_at(&[10, 10, 10]);
        let st = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
        let c = g.node_at(&[20, 20, 20]);
        let exact = 0.5 * 3f64.sqrt();
        assert!(((st.value(c) - exact) / exact).abs() < 0.1);
        assert!(max_residual(&st, &p) <= 1e-10);
        assert!(is_causal(&st) && is_monotone(&st));
    }
}
