//! Builds instances from a config and runs the solver battery.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use eikonal_astar::analysis::{compute_metrics, extract_trajectory, write_reports, RunReport, Trajectory};
use eikonal_astar::astar::{aa_star_solve, build_heuristic, sa_star_solve, AaOptions, RestrictedRun};
use eikonal_astar::fmm::{bidirectional_solve, fmm_solve, ExitSet, Label, Problem, SolverState, Stop};
use eikonal_astar::grid::euclid;
use eikonal_astar::heuristics::{compute_psi, Heuristic, HeuristicKind, Provenance};
use eikonal_astar::instances::{self, Instance};
use eikonal_astar::speed::IntensityMatrix;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InstanceSpec, MethodSpec, PsiSpec};
use crate::error::{CliError, CliResult};

/// One grid size, with everything the runs share.
pub struct Prepared {
    pub inst: Instance,
    /// Base-speed problem of the observers example.
    pub fast: Option<Problem>,
    /// `U(s)` from stop-at-source FMM.
    pub u_s: f64,
    /// Exact or fine-grid `u(s)`.
    pub truth: Option<f64>,
    pub psi: f64,
}

fn load_matrix(path: &Path) -> CliResult<IntensityMatrix> {
    IntensityMatrix::from_path(path).map_err(|e| CliError::config("instance.path", format!("{}: {e}", path.display())))
}

/// The instance at size `m`, with `s`/`t` overrides applied (snapped to
/// the nearest nodes).
pub fn build_instance(cfg: &ExperimentConfig, m: usize) -> CliResult<(Instance, Option<Problem>)> {
    let (mut inst, fast) = match &cfg.instance {
        InstanceSpec::Const2d => (instances::const2d(m)?, None),
        InstanceSpec::Const3d => (instances::const3d(m)?, None),
        InstanceSpec::Sin2d => (instances::sin2d(m)?, None),
        InstanceSpec::Sin3d { amplitude } => (instances::sin3d(m, *amplitude)?, None),
        InstanceSpec::Sampled { path } => {
            let matrix = load_matrix(path)?;
            let s = cfg.s.as_deref().expect("validated");
            let t = cfg.t.as_deref().expect("validated");
            (instances::sampled(&matrix, m, s, t)?, None)
        }
        InstanceSpec::Observers => {
            let (i, f) = instances::observers(m)?;
            (i, Some(f))
        }
    };
    let (lo, hi) = inst.problem.field().bounds();
    let grid = inst.grid().clone();
    if let Some(s) = &cfg.s {
        inst.s = grid.locate(s, true)?;
    }
    if let Some(t) = &cfg.t {
        inst.t = grid.locate(t, true)?;
    }
    if inst.s == inst.t {
        return Err(CliError::config("instance.s", "source and target snap to the same node".into()));
    }
    // straight lines are optimal for constant speed
    if lo == hi {
        inst.exact = Some(euclid(&inst.s_pos(), &inst.t_pos()) / lo);
    }
    Ok((inst, fast))
}

pub fn prepare(cfg: &ExperimentConfig, m: usize) -> CliResult<Prepared> {
    let (inst, fast) = build_instance(cfg, m)?;
    let reference = fmm_solve(&inst.problem, &ExitSet::single(inst.t), Stop::AtNode(inst.s))?;
    let u_s = reference.value(inst.s);
    let truth = match (inst.exact, cfg.reference_m) {
        (Some(u), _) => Some(u),
        (None, Some(fine)) => {
            let (fi, _) = build_instance(cfg, fine)?;
            Some(fmm_solve(&fi.problem, &ExitSet::single(fi.t), Stop::AtNode(fi.s))?.value(fi.s))
        }
        (None, None) => None,
    };
    let base = match cfg.psi {
        PsiSpec::Psi1 => compute_psi(Provenance::Psi1, &inst.problem, inst.s, inst.t, None)?.value,
        PsiSpec::Psi2 => compute_psi(Provenance::Psi2, &inst.problem, inst.s, inst.t, None)?.value,
        PsiSpec::Psi3 => u_s,
        PsiSpec::Path | PsiSpec::Refined => {
            let b = instances::observer_bounds(&inst, fast.as_ref().expect("observers"), instances::OBSERVERS_TUBE)?;
            if cfg.psi == PsiSpec::Path {
                b.psi_a
            } else {
                b.psi_b
            }
        }
        PsiSpec::Value(v) => v,
        PsiSpec::Inf => f64::INFINITY,
    };
    let dim = inst.grid().dim();
    let psi = if cfg.inflate_psi {
        base * (1.0 + cfg.eps_tol_for(dim) * inst.grid().h().powf(cfg.mu))
    } else {
        base
    };
    Ok(Prepared {
        inst,
        fast,
        u_s,
        truth,
        psi,
    })
}

pub fn make_heuristic(cfg: &ExperimentConfig, p: &Prepared, lambda: f64) -> CliResult<Heuristic> {
    Ok(match cfg.heuristic {
        HeuristicKind::HigherSpeed => Heuristic::higher_speed(p.fast.as_ref().expect("validated"), p.inst.s, lambda)?,
        kind => build_heuristic(&p.inst.problem, p.inst.s, kind, lambda, cfg.ratio)?,
    })
}

/// Outcome of one solver call.
pub enum Outcome {
    Single(SolverState, f64),
    Restricted(RestrictedRun),
    Bidirectional { accepted: usize, considered: usize, value: f64 },
}

impl Outcome {
    fn value(&self) -> f64 {
        match self {
            Outcome::Single(_, v) => *v,
            Outcome::Restricted(r) => r.value,
            Outcome::Bidirectional { value, .. } => *value,
        }
    }

    fn counts(&self) -> (usize, usize) {
        match self {
            Outcome::Single(s, _) => (s.accepted_count(), s.considered_count()),
            Outcome::Restricted(r) => (r.state.accepted_count(), r.state.considered_count()),
            Outcome::Bidirectional { accepted, considered, .. } => (*accepted, *considered),
        }
    }

    pub fn state(&self) -> Option<&SolverState> {
        match self {
            Outcome::Single(s, _) => Some(s),
            Outcome::Restricted(r) => Some(&r.state),
            Outcome::Bidirectional { .. } => None,
        }
    }
}

/// Runs `method` once.
pub fn run_method(cfg: &ExperimentConfig, p: &Prepared, method: MethodSpec, heuristic: Option<&Heuristic>) -> CliResult<Outcome> {
    let inst = &p.inst;
    let dim = inst.grid().dim();
    let exits = ExitSet::single(inst.t);
    Ok(match method {
        MethodSpec::Fmm => {
            let st = fmm_solve(&inst.problem, &exits, Stop::Full)?;
            let v = st.value(inst.s);
            Outcome::Single(st, v)
        }
        MethodSpec::FmmStop => {
            let st = fmm_solve(&inst.problem, &exits, Stop::AtNode(inst.s))?;
            let v = st.value(inst.s);
            Outcome::Single(st, v)
        }
        MethodSpec::Bidir => {
            let bi = bidirectional_solve(&inst.problem, inst.s, inst.t)?;
            let touched = |i: usize| bi.from_t.label[i] != Label::Far || bi.from_s.label[i] != Label::Far;
            let accepted = |i: usize| bi.from_t.label[i] == Label::Accepted || bi.from_s.label[i] == Label::Accepted;
            let considered = (0..bi.from_t.u.len()).filter(|&i| touched(i) && !accepted(i)).count();
            Outcome::Bidirectional {
                accepted: bi.accepted_total(),
                considered,
                value: bi.value,
            }
        }
        MethodSpec::Sa => Outcome::Restricted(sa_star_solve(
            &inst.problem,
            inst.t,
            inst.s,
            heuristic.expect("restricted"),
            cfg.cache_phi,
        )?),
        MethodSpec::Aa | MethodSpec::AaBb => {
            let opts = AaOptions {
                eps_tol: cfg.eps_tol_for(dim),
                mu: cfg.mu,
                ..AaOptions::new(p.psi, dim)
            }
            .with_bb(method == MethodSpec::AaBb);
            Outcome::Restricted(aa_star_solve(&inst.problem, inst.t, inst.s, heuristic.expect("restricted"), opts)?)
        }
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

struct Job {
    size: usize,
    method: MethodSpec,
    lambda: Option<f64>,
}

fn trajectory_name(inst: &Instance, method: MethodSpec, lambda: Option<f64>) -> String {
    let m = inst.grid().m();
    match lambda {
        Some(l) => format!("{}_m{m}_{}_l{l}.csv", inst.name, method.as_str()),
        None => format!("{}_m{m}_{}.csv", inst.name, method.as_str()),
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    let axes = ["x", "y", "z"];
    let dim = traj.points.first().map_or(2, Vec::len);
    writeln!(out, "{}", axes[..dim].join(","))?;
    for p in &traj.points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn run_job(cfg: &ExperimentConfig, prepared: &[Prepared], job: &Job, hash: &str) -> CliResult<RunReport> {
    let p = &prepared[job.size];
    let heuristic = match job.lambda {
        Some(l) => Some(make_heuristic(cfg, p, l)?),
        None => None,
    };
    let mut times = Vec::with_capacity(cfg.repeat);
    let mut last = None;
    for _ in 0..cfg.repeat {
        let clock = Instant::now();
        let out = run_method(cfg, p, job.method, heuristic.as_ref())?;
        times.push(clock.elapsed().as_secs_f64());
        last = Some(out);
    }
    let out = last.expect("repeat >= 1");
    let g = p.inst.grid();
    let (accepted, considered) = out.counts();
    let mut r = compute_metrics(out.value(), p.u_s, p.truth, accepted, considered, g.m(), g.dim())?;
    r.instance = p.inst.name.clone();
    r.method = job.method.as_str().to_string();
    r.heuristic = match job.lambda {
        Some(_) => cfg.heuristic.as_str().to_string(),
        None => "none".to_string(),
    };
    r.lambda = job.lambda.unwrap_or(0.0);
    r.psi = matches!(job.method, MethodSpec::Aa | MethodSpec::AaBb).then_some(p.psi);
    r.wall_time = if cfg.deterministic { 0.0 } else { median(times) };
    r.config_hash = hash.to_string();

    if let (Some(dir), Some(st)) = (&cfg.trajectories, out.state()) {
        match extract_trajectory(&st.u, g, &p.inst.s_pos(), &p.inst.t_pos(), None, None) {
            Ok(traj) => write_trajectory(&dir.join(trajectory_name(&p.inst, job.method, job.lambda)), &traj)?,
            Err(e) => eprintln!("note: no trajectory for {} (m={}): {e}", job.method.as_str(), g.m()),
        }
    }
    Ok(r)
}

/// All runs of the battery, in config order: sizes, then methods, then
/// `lambda` values.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Vec<RunReport>> {
    let hash = cfg.hash();
    if let Some(dir) = &cfg.trajectories {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| CliError::config("run.threads", e.to_string()))?;
    pool.install(|| {
        let prepared: Vec<Prepared> = cfg.m.par_iter().map(|&m| prepare(cfg, m)).collect::<CliResult<_>>()?;
        let mut jobs = Vec::new();
        for size in 0..cfg.m.len() {
            for &method in &cfg.methods {
                if method.restricted() {
                    jobs.extend(cfg.lambdas.iter().map(|&l| Job {
                        size,
                        method,
                        lambda: Some(l),
                    }));
                } else {
                    jobs.push(Job {
                        size,
                        method,
                        lambda: None,
                    });
                }
            }
        }
        jobs.par_iter().map(|j| run_job(cfg, &prepared, j, &hash)).collect()
    })
}

/// CSV to `cfg.output` (or `fallback`), JSON to `cfg.json` when set.
pub fn write_outputs<W: Write>(cfg: &ExperimentConfig, reports: &[RunReport], fallback: W) -> CliResult<()> {
    match &cfg.output {
        Some(path) => write_reports(fs::File::create(path)?, reports)?,
        None => write_reports(fallback, reports)?,
    }
    if let Some(path) = &cfg.json {
        let json = serde_json::to_string_pretty(reports).map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(path, json + "\n")?;
    }
    Ok(())
}
