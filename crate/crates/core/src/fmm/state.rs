use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeId};

pub(crate) const NO_RANK: u32 = u32::MAX;
const NO_NODE: NodeId = NodeId(u32::MAX);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Far,
    Considered,
    Accepted,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Far => "far",
            Label::Considered => "considered",
            Label::Accepted => "accepted",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "far" => Ok(Label::Far),
            "considered" => Ok(Label::Considered),
            "accepted" => Ok(Label::Accepted),
            _ => Err(Error::Parse(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Fixed exit value, no parents.
    Exit,
    OneSided,
    /// Two- or three-term quadratic.
    Quadratic,
}

/// Which accepted neighbours produced a node's current value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpwindRecord {
    parents: [NodeId; 3],
    count: u8,
    exit: bool,
}

impl Default for UpwindRecord {
    fn default() -> Self {
        UpwindRecord {
            parents: [NO_NODE; 3],
            count: 0,
            exit: false,
        }
    }
}

impl UpwindRecord {
    pub(crate) fn exit() -> Self {
        UpwindRecord {
            exit: true,
            ..Default::default()
        }
    }

    pub(crate) fn from_parents(parents: &[NodeId]) -> Self {
        let mut r = UpwindRecord::default();
        for (k, &p) in parents.iter().enumerate() {
            r.parents[k] = p;
        }
        r.count = parents.len() as u8;
        r
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents[..self.count as usize]
    }

    /// `None` for nodes that were never updated.
    pub fn branch(&self) -> Option<Branch> {
        match (self.exit, self.count) {
            (true, _) => Some(Branch::Exit),
            (false, 0) => None,
            (false, 1) => Some(Branch::OneSided),
            _ => Some(Branch::Quadratic),
        }
    }
}

/// Exit nodes with their penalties `q >= 0`; `q = +inf` marks a blocked node.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitSet {
    entries: Vec<(NodeId, f64)>,
}

impl ExitSet {
    pub fn new(entries: Vec<(NodeId, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyExitSet);
        }
        for &(_, q) in &entries {
            if q.is_nan() || q < 0.0 {
                return Err(Error::BadPenalty(q));
            }
        }
        Ok(ExitSet { entries })
    }

    /// A single exit with zero penalty.
    pub fn single(t: NodeId) -> Self {
        ExitSet {
            entries: vec![(t, 0.0)],
        }
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn push(&mut self, node: NodeId, q: f64) -> Result<()> {
        if q.is_nan() || q < 0.0 {
            return Err(Error::BadPenalty(q));
        }
        self.entries.push((node, q));
        Ok(())
    }
}

/// Everything a marching solve leaves behind.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub label: Vec<Label>,
    pub accept_rank: Vec<u32>,
    /// Accepted nodes in acceptance order.
    pub order: Vec<NodeId>,
    pub upwind: Vec<UpwindRecord>,
}

impl SolverState {
    pub(crate) fn new(grid: &Grid) -> Self {
        let n = grid.len();
        SolverState {
            grid: grid.clone(),
            u: vec![f64::INFINITY; n],
            label: vec![Label::Far; n],
            accept_rank: vec![NO_RANK; n],
            order: Vec::new(),
            upwind: vec![UpwindRecord::default(); n],
        }
    }

    #[inline]
    pub fn value(&self, node: NodeId) -> f64 {
        self.u[node.index()]
    }

    #[inline]
    pub fn is_accepted(&self, node: NodeId) -> bool {
        self.label[node.index()] == Label::Accepted
    }

    pub fn rank(&self, node: NodeId) -> Option<u32> {
        let r = self.accept_rank[node.index()];
        (r != NO_RANK).then_some(r)
    }

    pub fn accepted_count(&self) -> usize {
        self.order.len()
    }

    pub fn considered_count(&self) -> usize {
        self.label.iter().filter(|&&l| l == Label::Considered).count()
    }

    /// Fraction of lattice nodes that left the FAR state.
    pub fn fraction_computed(&self) -> f64 {
        (self.accepted_count() + self.considered_count()) as f64 / self.grid.len() as f64
    }

    pub fn record(&self, node: NodeId) -> &UpwindRecord {
        &self.upwind[node.index()]
    }

    /// Values of the recorded upwind parents of `node`.
    pub fn parent_values(&self, node: NodeId) -> Vec<f64> {
        self.record(node).parents().iter().map(|&p| self.value(p)).collect()
    }

    /// Writes `node,x,y[,z],U,label,accept_rank` plus any extra columns.
    pub fn write_csv<W: Write>(&self, out: W, extra: &[(&str, &[f64])]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let axes = ["x", "y", "z"];
        let mut header: Vec<&str> = vec!["node"];
        header.extend(&axes[..self.grid.dim()]);
        header.extend(["U", "label", "accept_rank"]);
        header.extend(extra.iter().map(|(name, _)| *name));
        w.write_record(&header)?;
        for n in 0..self.grid.len() {
            let id = NodeId(n as u32);
            let mut row = vec![n.to_string()];
            row.extend(self.grid.position(id).iter().map(|c| c.to_string()));
            row.push(self.u[n].to_string());
            row.push(self.label[n].as_str().to_string());
            row.push(self.rank(id).map(|r| r.to_string()).unwrap_or_default());
            for (_, col) in extra {
                row.push(col[n].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads values, labels and ranks back from [`SolverState::write_csv`]
    /// output. Upwind records are not part of the export.
    pub fn read_csv<R: Read>(input: R, grid: &Grid) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
        };
        let (c_node, c_u, c_label, c_rank) = (col("node")?, col("U")?, col("label")?, col("accept_rank")?);
        let mut st = SolverState::new(grid);
        let mut seen = 0usize;
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                rec[c]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{:?}: {e}", &rec[c])))
            };
            let n = parse(c_node)? as usize;
            if n >= grid.len() {
                return Err(Error::NodeOutOfRange(n, grid.len()));
            }
            st.u[n] = parse(c_u)?;
            st.label[n] = Label::parse(&rec[c_label])?;
            if !rec[c_rank].is_empty() {
                st.accept_rank[n] = parse(c_rank)? as u32;
            }
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::TableSize {
                expected: grid.len(),
                got: seen,
            });
        }
        let mut ranked: Vec<(u32, u32)> = (0..grid.len())
            .filter(|&n| st.accept_rank[n] != NO_RANK)
            .map(|n| (st.accept_rank[n], n as u32))
            .collect();
        ranked.sort_unstable();
        st.order = ranked.into_iter().map(|(_, n)| NodeId(n)).collect();
        Ok(st)
    }
}
