//! The Dijkstra-structured marching loop shared by every solver variant.
//!
//! A [`Marcher`] owns one [`SolverState`] and a priority queue. Callers drive
//! it one acceptance at a time, which lets the restricted solvers hook into
//! the consideration step and lets the bidirectional solver interleave two
//! fronts.

use crate::error::{Error, Result};
use crate::fmm::heap::IndexedHeap;
use crate::fmm::state::{ExitSet, Label, SolverState, UpwindRecord};
use crate::fmm::update::local_update_axes;
use crate::fmm::Problem;
use crate::grid::NodeId;

const FREE: u8 = 0;
const EXIT: u8 = 1;
const OUT: u8 = 2;

/// Additive priority term: the queue is ordered by `U + phi`.
pub enum Phi<'a> {
    Zero,
    /// One precomputed value per node.
    Table(Vec<f64>),
    /// Evaluated whenever a key changes.
    Lazy(Box<dyn Fn(NodeId) -> f64 + 'a>),
}

impl Phi<'_> {
    #[inline]
    fn at(&self, node: NodeId) -> f64 {
        match self {
            Phi::Zero => 0.0,
            Phi::Table(t) => t[node.index()],
            Phi::Lazy(f) => f(node),
        }
    }
}

pub struct Marcher<'a> {
    problem: &'a Problem,
    kind: Vec<u8>,
    heap: IndexedHeap,
    phi: Phi<'a>,
    pub state: SolverState,
}

impl<'a> Marcher<'a> {
    /// Seeds exits with finite penalties; `+inf` exits and nodes outside
    /// `domain` never enter the computation.
    pub fn new(problem: &'a Problem, domain: Option<&[bool]>, exits: &ExitSet, phi: Phi<'a>) -> Result<Self> {
        let grid = problem.grid();
        let n = grid.len();
        if let Some(d) = domain {
            if d.len() != n {
                return Err(Error::TableSize { expected: n, got: d.len() });
            }
        }
        let mut kind = match domain {
            Some(d) => d.iter().map(|&inside| if inside { FREE } else { OUT }).collect(),
            None => vec![FREE; n],
        };
        let mut state = SolverState::new(grid);
        let mut heap = IndexedHeap::new(n);
        for &(node, q) in exits.entries() {
            grid.check(node)?;
            let i = node.index();
            if q.is_infinite() {
                kind[i] = OUT;
                continue;
            }
            kind[i] = EXIT;
            if q < state.u[i] {
                state.u[i] = q;
                state.label[i] = Label::Considered;
                state.upwind[i] = UpwindRecord::exit();
                heap.push_or_update(node.0, q + phi.at(node));
            }
        }
        Ok(Marcher {
            problem,
            kind,
            heap,
            phi,
            state,
        })
    }

    pub fn queue_len(&self) -> usize {
        self.heap.len()
    }

    /// Accepts the queue minimum.
    pub fn pop(&mut self) -> Option<NodeId> {
        let (_, id) = self.heap.pop()?;
        let node = NodeId(id);
        let st = &mut self.state;
        st.label[node.index()] = Label::Accepted;
        st.accept_rank[node.index()] = st.order.len() as u32;
        st.order.push(node);
        Some(node)
    }

    /// Recomputes every non-accepted neighbour of a freshly accepted node
    /// whose current value is above the node's own. Directional minima use
    /// every known value, tentative ones included (this only matters when
    /// the queue is not ordered by `U` alone).
    /// A FAR neighbour becomes CONSIDERED only if `admit(node, value)`.
    pub fn relax<F: FnMut(NodeId, f64) -> bool>(&mut self, node: NodeId, mut admit: F) {
        let grid = self.problem.grid();
        let dim = grid.dim();
        let h = grid.h();
        let own = self.state.u[node.index()];
        for axis in 0..dim {
            for nb in grid.axis_neighbors(node, axis).into_iter().flatten() {
                let i = nb.index();
                if self.kind[i] != FREE || self.state.label[i] == Label::Accepted || self.state.u[i] <= own {
                    continue;
                }
                let mut vals = [f64::INFINITY; 3];
                let mut from = [NodeId(0); 3];
                for (a, (val, src)) in vals.iter_mut().zip(from.iter_mut()).enumerate().take(dim) {
                    for p in grid.axis_neighbors(nb, a).into_iter().flatten() {
                        let v = self.state.u[p.index()];
                        if v < *val {
                            *val = v;
                            *src = p;
                        }
                    }
                }
                let Some(up) = local_update_axes(&vals[..dim], h, self.problem.f()[i]) else {
                    continue;
                };
                if up.value >= self.state.u[i] {
                    continue;
                }
                if self.state.label[i] == Label::Far && !admit(nb, up.value) {
                    continue;
                }
                let mut parents = [NodeId(0); 3];
                let mut k = 0;
                for a in 0..dim {
                    if up.axes & (1 << a) != 0 {
                        parents[k] = from[a];
                        k += 1;
                    }
                }
                self.state.u[i] = up.value;
                self.state.label[i] = Label::Considered;
                self.state.upwind[i] = UpwindRecord::from_parents(&parents[..k]);
                self.heap.push_or_update(nb.0, up.value + self.phi.at(nb));
            }
        }
    }

    /// Pops and relaxes until `stop` is accepted (or the queue empties).
    /// The stop node's neighbours are left untouched.
    pub fn run(&mut self, stop: Option<NodeId>) -> Option<NodeId> {
        while let Some(x) = self.pop() {
            if Some(x) == stop {
                return Some(x);
            }
            self.relax(x, |_, _| true);
        }
        None
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }
}
