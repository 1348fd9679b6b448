//! Dynamically restricted Fast Marching.
//!
//! * SA*-FMM orders the queue by `U + phi` and stops when `s` is accepted.
//!   An inconsistent `phi` lets it accept nodes too early, so its `U*(s)` may
//!   exceed the full-grid value.
//! * AA*-FMM keeps the queue ordered by `U` but never lets a node leave the
//!   FAR state unless `U + phi <= (1 + eps h^mu) Psi`. Every accepted value is
//!   then the exact Fast Marching value of the restricted problem. With
//!   branch and bound, `Psi` shrinks to `U(x) + |x - s| / F1` whenever that is
//!   smaller.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmm::{Marcher, Phi, Problem, SolverState};
use crate::fmm::ExitSet;
use crate::grid::{euclid, NodeId};
use crate::heuristics::{Heuristic, HeuristicKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sa,
    Aa,
}

/// Everything needed to rebuild a restricted run, in serialisable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionConfig {
    pub method: Method,
    pub heuristic: HeuristicKind,
    pub lambda: f64,
    /// Coarse-grid ratio `R` (only read by the coarse-grid heuristic).
    pub ratio: f64,
    /// `Psi`; `None` means `+inf` (AA only).
    pub psi: Option<f64>,
    pub eps_tol: f64,
    pub mu: f64,
    pub branch_and_bound: bool,
    pub cache_phi: bool,
}

/// `eps_tol` defaults: 1/4 in 2D, 1/3 in 3D.
pub fn default_eps_tol(dim: usize) -> f64 {
    if dim == 3 {
        1.0 / 3.0
    } else {
        0.25
    }
}

pub const DEFAULT_MU: f64 = 0.5;

impl RestrictionConfig {
    pub fn sa(heuristic: HeuristicKind, lambda: f64) -> Self {
        RestrictionConfig {
            method: Method::Sa,
            heuristic,
            lambda,
            ratio: 0.25,
            psi: None,
            eps_tol: 0.0,
            mu: DEFAULT_MU,
            branch_and_bound: false,
            cache_phi: true,
        }
    }

    pub fn aa(heuristic: HeuristicKind, lambda: f64, psi: Option<f64>, dim: usize) -> Self {
        RestrictionConfig {
            method: Method::Aa,
            psi,
            eps_tol: default_eps_tol(dim),
            ..Self::sa(heuristic, lambda)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tol >= 0.0 && self.eps_tol.is_finite()) {
            return Err(Error::BadConfig(format!("eps_tol = {}", self.eps_tol)));
        }
        if !(0.0..=0.5).contains(&self.mu) {
            return Err(Error::BadConfig(format!("mu = {} outside [0, 1/2]", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::BadConfig(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if let Some(p) = self.psi {
            if p.is_nan() || p < 0.0 {
                return Err(Error::BadConfig(format!("psi = {p}")));
            }
        }
        Ok(())
    }

    /// `key = value` lines.
    pub fn to_kv(&self) -> String {
        let method = match self.method {
            Method::Sa => "sa",
            Method::Aa => "aa",
        };
        let psi = self.psi.map_or("inf".to_string(), |p| p.to_string());
        format!(
            "method = {method}\nheuristic = {}\nlambda = {}\nratio = {}\npsi = {psi}\neps_tol = {}\nmu = {}\nbranch_and_bound = {}\ncache_phi = {}\n",
            self.heuristic.as_str(),
            self.lambda,
            self.ratio,
            self.eps_tol,
            self.mu,
            self.branch_and_bound,
            self.cache_phi
        )
    }

    /// Parses the output of [`RestrictionConfig::to_kv`]; blank lines and
    /// `#` comments are ignored, missing keys keep SA defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::sa(HeuristicKind::Zero, 0.0);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::BadConfig(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::BadConfig(format!("{k}: not a number: {v:?}")))
            };
            let flag = |v: &str| {
                v.parse::<bool>()
                    .map_err(|_| Error::BadConfig(format!("{k}: not a boolean: {v:?}")))
            };
            match k {
                "method" => {
                    cfg.method = match v {
                        "sa" => Method::Sa,
                        "aa" => Method::Aa,
                        _ => return Err(Error::BadConfig(format!("method: unknown {v:?}"))),
                    }
                }
                "heuristic" => cfg.heuristic = v.parse()?,
                "lambda" => cfg.lambda = num(v)?,
                "ratio" => cfg.ratio = num(v)?,
                "psi" => {
                    let p = num(v)?;
                    cfg.psi = (!p.is_infinite()).then_some(p);
                }
                "eps_tol" => cfg.eps_tol = num(v)?,
                "mu" => cfg.mu = num(v)?,
                "branch_and_bound" => cfg.branch_and_bound = flag(v)?,
                "cache_phi" => cfg.cache_phi = flag(v)?,
                _ => return Err(Error::BadConfig(format!("unknown key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Outcome of a restricted solve.
#[derive(Clone, Debug)]
pub struct RestrictedRun {
    pub state: SolverState,
    /// `U*(s)`.
    pub value: f64,
    pub psi_initial: f64,
    pub psi_final: f64,
    /// The queue ran dry before `s` was accepted; `value` is then `psi_final`.
    pub exhausted: bool,
}

impl RestrictedRun {
    pub fn fraction_computed(&self) -> f64 {
        self.state.fraction_computed()
    }
}

fn phi_source<'a>(problem: &'a Problem, heuristic: &'a Heuristic, cache: bool) -> Phi<'a> {
    if heuristic.kind() == HeuristicKind::Zero {
        Phi::Zero
    } else if cache {
        Phi::Table(heuristic.table(problem.grid()))
    } else {
        let grid = problem.grid();
        Phi::Lazy(Box::new(move |x| heuristic.eval_node(grid, x)))
    }
}

/// SA*-FMM: Fast Marching from `t` with queue key `U + phi`, stopped when `s`
/// is accepted.
pub fn sa_star_solve(
    problem: &Problem,
    t: NodeId,
    s: NodeId,
    heuristic: &Heuristic,
    cache_phi: bool,
) -> Result<RestrictedRun> {
    problem.grid().check(s)?;
    let mut m = Marcher::new(problem, None, &ExitSet::single(t), phi_source(problem, heuristic, cache_phi))?;
    if m.run(Some(s)) != Some(s) {
        return Err(Error::Unreached(s));
    }
    let state = m.into_state();
    Ok(RestrictedRun {
        value: state.value(s),
        state,
        psi_initial: f64::INFINITY,
        psi_final: f64::INFINITY,
        exhausted: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AaOptions {
    /// `Psi >= u(s)`; `+inf` disables pruning.
    pub psi: f64,
    pub eps_tol: f64,
    pub mu: f64,
    pub branch_and_bound: bool,
}

impl AaOptions {
    pub fn new(psi: f64, dim: usize) -> Self {
        AaOptions {
            psi,
            eps_tol: default_eps_tol(dim),
            mu: DEFAULT_MU,
            branch_and_bound: false,
        }
    }

    /// Plain `U + phi <= Psi` with no tolerance factor.
    pub fn exact(psi: f64) -> Self {
        AaOptions {
            psi,
            eps_tol: 0.0,
            mu: DEFAULT_MU,
            branch_and_bound: false,
        }
    }

    pub fn with_bb(mut self, on: bool) -> Self {
        self.branch_and_bound = on;
        self
    }
}

/// AA*-FMM: Fast Marching from `t` that only considers nodes with
/// `U + phi <= (1 + eps_tol h^mu) Psi`.
pub fn aa_star_solve(
    problem: &Problem,
    t: NodeId,
    s: NodeId,
    heuristic: &Heuristic,
    opts: AaOptions,
) -> Result<RestrictedRun> {
    let grid = problem.grid();
    grid.check(s)?;
    grid.check(t)?;
    if opts.psi.is_nan() || opts.psi < 0.0 || opts.eps_tol < 0.0 {
        return Err(Error::BadConfig(format!("psi = {}, eps_tol = {}", opts.psi, opts.eps_tol)));
    }
    let phi_t = heuristic.eval_node(grid, t);
    if opts.psi < phi_t {
        return Err(Error::InvalidOverestimate { psi: opts.psi, phi: phi_t });
    }
    let factor = 1.0 + opts.eps_tol * grid.h().powf(opts.mu);
    let (f1, _) = problem.speed_bounds();
    let xs = grid.position(s);
    let mut psi = opts.psi;
    let mut m = Marcher::new(problem, None, &ExitSet::single(t), Phi::Zero)?;
    let mut reached = false;
    while let Some(x) = m.pop() {
        if opts.branch_and_bound {
            let mut d2 = 0.0;
            for (a, sa) in xs.iter().enumerate() {
                let d = grid.coord(x, a) - sa;
                d2 += d * d;
            }
            psi = psi.min(m.state.value(x) + d2.sqrt() / f1);
        }
        if x == s {
            reached = true;
            break;
        }
        let bound = factor * psi;
        m.relax(x, |y, u| u + heuristic.eval_node(grid, y) <= bound);
    }
    let state = m.into_state();
    let value = if reached { state.value(s) } else { psi };
    Ok(RestrictedRun {
        value,
        state,
        psi_initial: opts.psi,
        psi_final: psi,
        exhausted: !reached,
    })
}

/// Runs the method named in `cfg`, building the heuristic for source `s`.
pub fn solve_with_config(problem: &Problem, t: NodeId, s: NodeId, cfg: &RestrictionConfig) -> Result<RestrictedRun> {
    cfg.validate()?;
    let heuristic = build_heuristic(problem, s, cfg.heuristic, cfg.lambda, cfg.ratio)?;
    match cfg.method {
        Method::Sa => sa_star_solve(problem, t, s, &heuristic, cfg.cache_phi),
        Method::Aa => aa_star_solve(
            problem,
            t,
            s,
            &heuristic,
            AaOptions {
                psi: cfg.psi.unwrap_or(f64::INFINITY),
                eps_tol: cfg.eps_tol,
                mu: cfg.mu,
                branch_and_bound: cfg.branch_and_bound,
            },
        ),
    }
}

/// Builds a heuristic for source `s` on `problem`'s grid. The higher-speed
/// kind needs a separate faster field and is rejected here.
pub fn build_heuristic(problem: &Problem, s: NodeId, kind: HeuristicKind, lambda: f64, ratio: f64) -> Result<Heuristic> {
    match kind {
        HeuristicKind::Zero => Ok(Heuristic::zero()),
        HeuristicKind::Naive => Heuristic::naive(problem.grid().position(s), problem.speed_bounds().1, lambda),
        HeuristicKind::Oracle => Heuristic::oracle(problem, s, lambda),
        HeuristicKind::CoarseGrid => Heuristic::coarse_grid(problem, s, ratio, lambda),
        HeuristicKind::HigherSpeed => Err(Error::MissingTable),
    }
}

/// Boolean masks of the three nested relevance sets.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceSets {
    /// `|x - s| + |x - t| <= F2 Psi`.
    pub c1: Vec<bool>,
    /// `u + phi <= Psi`.
    pub c2: Vec<bool>,
    /// `u + v <= Psi`.
    pub c3: Vec<bool>,
}

impl RelevanceSets {
    pub fn counts(&self) -> [usize; 3] {
        [&self.c1, &self.c2, &self.c3].map(|m| m.iter().filter(|&&b| b).count())
    }

    /// Whether `C3 <= C2 <= C1` pointwise.
    pub fn nested(&self) -> bool {
        (0..self.c1.len()).all(|i| (!self.c3[i] || self.c2[i]) && (!self.c2[i] || self.c1[i]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "c1", "c2", "c3"])?;
        for i in 0..self.c1.len() {
            let b = |v: bool| if v { "1" } else { "0" };
            w.write_record([i.to_string().as_str(), b(self.c1[i]), b(self.c2[i]), b(self.c3[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `u` solved from `t`, `v` from `s`, both on `problem`'s grid.
pub fn relevance_sets(
    problem: &Problem,
    u: &SolverState,
    v: &SolverState,
    heuristic: &Heuristic,
    s: NodeId,
    t: NodeId,
    psi: f64,
) -> Result<RelevanceSets> {
    let grid = problem.grid();
    let n = grid.len();
    if u.u.len() != n || v.u.len() != n {
        return Err(Error::TableSize {
            expected: n,
            got: u.u.len().min(v.u.len()),
        });
    }
    let (_, f2) = problem.speed_bounds();
    let xs = grid.position(s);
    let xt = grid.position(t);
    let reach = f2 * psi;
    let mut sets = RelevanceSets {
        c1: vec![false; n],
        c2: vec![false; n],
        c3: vec![false; n],
    };
    let tol = 1e-12 * (1.0 + psi);
    for i in 0..n {
        let id = NodeId(i as u32);
        let x = grid.position(id);
        sets.c1[i] = euclid(&x, &xs) + euclid(&x, &xt) <= reach + tol;
        sets.c2[i] = u.u[i] + heuristic.eval_node(grid, id) <= psi + tol;
        sets.c3[i] = u.u[i] + v.u[i] <= psi + tol;
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmm::{fmm_solve, Stop};
    use crate::grid::Grid;
    use crate::speed::SpeedField;

    fn unit(m: usize) -> Problem {
        Problem::new(Grid::new(2, m, None).unwrap(), SpeedField::constant(1.0).unwrap()).unwrap()
    }

    #[test]
    fn kv_round_trip() {
        let mut cfg = RestrictionConfig::aa(HeuristicKind::Oracle, 0.7, Some(1.25), 2);
        cfg.branch_and_bound = true;
        let back = RestrictionConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        let inf = RestrictionConfig::aa(HeuristicKind::Naive, 1.0, None, 3);
        assert_eq!(RestrictionConfig::from_kv(&inf.to_kv()).unwrap(), inf);
        assert!(RestrictionConfig::from_kv("mu = 0.9").is_err());
        assert!(RestrictionConfig::from_kv("bogus = 1").is_err());
        assert!(RestrictionConfig::from_kv("lambda").is_err());
    }

    #[test]
    fn zero_heuristic_sa_matches_fmm() {
        let p = Problem::new(Grid::new(2, 41, None).unwrap(), SpeedField::oscillatory_2d()).unwrap();
        let g = p.grid();
        let (s, t) = (g.node_at(&[38, 28]), g.node_at(&[20, 20]));
        let fmm = fmm_solve(&p, &ExitSet::single(t), Stop::AtNode(s)).unwrap();
        for cache in [true, false] {
            let sa = sa_star_solve(&p, t, s, &Heuristic::zero(), cache).unwrap();
            assert_eq!(sa.state.order, fmm.order);
            assert_eq!(sa.value, fmm.value(s));
        }
    }

    #[test]
    fn sa_cache_modes_agree() {
        let p = unit(61);
        let g = p.grid();
        let (s, t) = (g.node_at(&[60, 60]), g.node_at(&[0, 0]));
        let h = Heuristic::naive(g.position(s), 1.0, 1.0).unwrap();
        let a = sa_star_solve(&p, t, s, &h, true).unwrap();
        let b = sa_star_solve(&p, t, s, &h, false).unwrap();
        assert_eq!(a.state.order, b.state.order);
        assert!(a.value >= fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap().value(s));
    }

    #[test]
    fn infinite_psi_is_plain_fmm() {
        let p = unit(41);
        let g = p.grid();
        let (s, t) = (g.node_at(&[40, 33]), g.node_at(&[2, 1]));
        let h = Heuristic::naive(g.position(s), 1.0, 1.0).unwrap();
        let aa = aa_star_solve(&p, t, s, &h, AaOptions::new(f64::INFINITY, 2)).unwrap();
        let fmm = fmm_solve(&p, &ExitSet::single(t), Stop::AtNode(s)).unwrap();
        assert_eq!(aa.state.order, fmm.order);
        assert_eq!(aa.state.u, fmm.u);
    }

    #[test]
    fn invalid_overestimate() {
        let p = unit(11);
        let g = p.grid();
        let (s, t) = (g.node_at(&[10, 10]), g.node_at(&[0, 0]));
        let h = Heuristic::naive(g.position(s), 1.0, 1.0).unwrap();
        let r = aa_star_solve(&p, t, s, &h, AaOptions::exact(1.0));
        assert!(matches!(r, Err(Error::InvalidOverestimate { .. })));
    }

    #[test]
    fn too_small_psi_exhausts_the_queue() {
        let p = unit(21);
        let g = p.grid();
        let (s, t) = (g.node_at(&[20, 20]), g.node_at(&[0, 0]));
        let h = Heuristic::naive(g.position(s), 1.0, 1.0).unwrap();
        let psi = 2f64.sqrt();
        let r = aa_star_solve(&p, t, s, &h, AaOptions::exact(psi)).unwrap();
        assert!(r.exhausted);
        assert_eq!(r.value, psi);
    }

    #[test]
    fn branch_and_bound_shrinks() {
        let p = Problem::new(Grid::new(2, 61, None).unwrap(), SpeedField::oscillatory_2d()).unwrap();
        let g = p.grid();
        let (s, t) = (g.node_at(&[55, 40]), g.node_at(&[30, 30]));
        let h = Heuristic::oracle(&p, s, 0.5).unwrap();
        let psi = 2.0;
        let off = aa_star_solve(&p, t, s, &h, AaOptions::new(psi, 2)).unwrap();
        let on = aa_star_solve(&p, t, s, &h, AaOptions::new(psi, 2).with_bb(true)).unwrap();
        assert!(on.psi_final <= psi);
        assert_eq!(on.value, off.value);
        for i in 0..g.len() {
            if on.state.label[i] != crate::fmm::Label::Far {
                assert_ne!(off.state.label[i], crate::fmm::Label::Far);
            }
        }
    }

    #[test]
    fn relevance_nesting() {
        let p = Problem::new(Grid::new(2, 41, None).unwrap(), SpeedField::oscillatory_2d()).unwrap();
        let g = p.grid();
        let (s, t) = (g.node_at(&[36, 28]), g.node_at(&[20, 20]));
        let u = fmm_solve(&p, &ExitSet::single(t), Stop::Full).unwrap();
        let v = fmm_solve(&p, &ExitSet::single(s), Stop::Full).unwrap();
        let h = Heuristic::naive(g.position(s), p.speed_bounds().1, 1.0).unwrap();
        let psi = 1.2 * u.value(s);
        let sets = relevance_sets(&p, &u, &v, &h, s, t, psi).unwrap();
        assert!(sets.nested());
        let [n1, n2, n3] = sets.counts();
        assert!(n1 >= n2 && n2 >= n3 && n3 > 0);
        let mut buf = Vec::new();
        sets.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), g.len() + 1);
    }
}
