//! Uniform Cartesian lattices in two and three dimensions.
//!
//! Nodes are numbered row-major over the multi-index `(i, j[, k])`, with `i`
//! running along the first coordinate axis and the last index varying fastest:
//! `id = (i * m + j) * m + k`. Acceptance-order tie breaks elsewhere in the
//! crate compare these linear indices, so the numbering is part of the
//! observable behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear index of a lattice node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Axis-aligned cube `[min, min + side]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec<f64>,
    pub side: f64,
}

impl Bounds {
    pub fn unit(dim: usize) -> Self {
        Bounds {
            min: vec![0.0; dim],
            side: 1.0,
        }
    }

    pub fn new(min: Vec<f64>, side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::BadBounds(format!("side length {side} must be positive")));
        }
        if min.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadBounds(format!("corner {min:?} is not finite")));
        }
        Ok(Bounds { min, side })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-12 * self.side;
        x.iter()
            .zip(&self.min)
            .all(|(&xi, &lo)| xi >= lo - tol && xi <= lo + self.side + tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    m: usize,
    h: f64,
    bounds: Bounds,
}

impl Grid {
    /// Builds an `m^dim` lattice over `bounds` (default `[0,1]^dim`).
    pub fn new(dim: usize, m: usize, bounds: Option<Bounds>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::BadDimension(dim));
        }
        if m < 2 {
            return Err(Error::TooFewNodes(m));
        }
        let bounds = bounds.unwrap_or_else(|| Bounds::unit(dim));
        if bounds.min.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bounds.min.len(),
            });
        }
        let total = (m as u128).pow(dim as u32);
        if total > u32::MAX as u128 {
            return Err(Error::BadBounds(format!("{total} nodes exceed the index range")));
        }
        let h = bounds.side / (m - 1) as f64;
        Ok(Grid { dim, m, h, bounds })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per side.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, node: NodeId) -> Result<()> {
        if node.index() < self.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange(node.index(), self.len()))
        }
    }

    #[inline]
    pub fn multi_index(&self, node: NodeId) -> [usize; 3] {
        let m = self.m;
        let mut rest = node.index();
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % m;
            rest /= m;
        }
        idx
    }

    #[inline]
    pub fn node_at(&self, idx: &[usize]) -> NodeId {
        let lin = idx[..self.dim].iter().fold(0usize, |acc, &i| acc * self.m + i);
        NodeId(lin as u32)
    }

    /// Stride of one step along `axis` in the linear numbering.
    #[inline]
    fn stride(&self, axis: usize) -> usize {
        self.m.pow((self.dim - 1 - axis) as u32)
    }

    /// The `(-, +)` neighbours of `node` along `axis`, `None` past the boundary.
    #[inline]
    pub fn axis_neighbors(&self, node: NodeId, axis: usize) -> [Option<NodeId>; 2] {
        let i = (node.index() / self.stride(axis)) % self.m;
        let s = self.stride(axis) as u32;
        let lo = (i > 0).then(|| NodeId(node.0 - s));
        let hi = (i + 1 < self.m).then(|| NodeId(node.0 + s));
        [lo, hi]
    }

    /// Axis neighbours in the order `-x, +x, -y, +y[, -z, +z]`, omitting
    /// those outside the lattice.
    pub fn neighbors(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.check(node)?;
        Ok(self.neighbors_iter(node).collect())
    }

    #[inline]
    pub fn neighbors_iter(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.dim).flat_map(move |axis| self.axis_neighbors(node, axis).into_iter().flatten())
    }

    pub fn node_position(&self, node: NodeId) -> Result<Vec<f64>> {
        self.check(node)?;
        Ok(self.position(node))
    }

    /// Unchecked variant of [`Grid::node_position`].
    #[inline]
    pub fn position(&self, node: NodeId) -> Vec<f64> {
        let idx = self.multi_index(node);
        (0..self.dim)
            .map(|a| self.bounds.min[a] + self.h * idx[a] as f64)
            .collect()
    }

    #[inline]
    pub fn coord(&self, node: NodeId, axis: usize) -> f64 {
        let i = (node.index() / self.stride(axis)) % self.m;
        self.bounds.min[axis] + self.h * i as f64
    }

    /// Maps `x` back to its lattice node. Off-lattice points are rejected
    /// unless `snap` is set, in which case the nearest node is returned.
    pub fn position_to_node(&self, x: &[f64], snap_tol: f64, snap: bool) -> Result<NodeId> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.bounds.contains(x) {
            return Err(Error::OutsideBounds(x.to_vec()));
        }
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            let r = (x[a] - self.bounds.min[a]) / self.h;
            let nearest = r.round().clamp(0.0, (self.m - 1) as f64);
            if !snap && (r - nearest).abs() > snap_tol {
                return Err(Error::OffLattice(x.to_vec()));
            }
            idx[a] = nearest as usize;
        }
        Ok(self.node_at(&idx))
    }

    /// Lattice node for a point expected to sit on the lattice (`snap_tol = 1e-9`).
    pub fn locate(&self, x: &[f64], snap: bool) -> Result<NodeId> {
        self.position_to_node(x, 1e-9, snap)
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        (0..self.dim)
            .map(|ax| {
                let d = self.coord(a, ax) - self.coord(b, ax);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
