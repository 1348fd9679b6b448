//! Per-node dumps for external plotting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use eikonal_astar::analysis::{conjecture_decay_fit, extract_trajectory, sensitivity_alphas, DecayOptions};
use eikonal_astar::astar::relevance_sets;
use eikonal_astar::fmm::{fmm_solve, ExitSet, SolverState, Stop};
use eikonal_astar::heuristics::{compute_psi, Provenance};
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodSpec};
use crate::error::{CliError, CliResult};
use crate::experiment::{make_heuristic, prepare, run_method, write_trajectory, Prepared};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    U,
    Labels,
    Alpha,
    Masks,
}

impl std::str::FromStr for Field {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "u" | "U" => Field::U,
            "labels" => Field::Labels,
            "alpha" => Field::Alpha,
            "masks" => Field::Masks,
            _ => return Err(format!("unknown field {s:?} (u, labels, alpha, masks)")),
        })
    }
}

/// State of the first configured method at the first size and `lambda`.
fn solve_first(cfg: &ExperimentConfig, p: &Prepared) -> CliResult<(MethodSpec, SolverState)> {
    let method = cfg.methods[0];
    let heuristic = match method.restricted() {
        true => Some(make_heuristic(cfg, p, cfg.lambdas[0])?),
        false => None,
    };
    let out = run_method(cfg, p, method, heuristic.as_ref())?;
    match out.state() {
        Some(st) => Ok((method, st.clone())),
        None => Err(CliError::config(
            "methods.list",
            format!("{} keeps no single per-node state to dump", method.as_str()),
        )),
    }
}

fn write_state(path: &Path, st: &SolverState, extra: &[(&str, &[f64])]) -> CliResult<()> {
    st.write_csv(BufWriter::new(File::create(path)?), extra)?;
    Ok(())
}

/// Writes the requested fields into `dir` and returns the file names.
pub fn dump_fields(cfg: &ExperimentConfig, which: &[Field], dir: &Path) -> CliResult<Vec<String>> {
    fs::create_dir_all(dir)?;
    let p = prepare(cfg, cfg.m[0])?;
    let mut written = Vec::new();
    let needs_state = which.iter().any(|f| matches!(f, Field::U | Field::Labels | Field::Alpha));
    let state = if needs_state { Some(solve_first(cfg, &p)?) } else { None };

    if which.iter().any(|f| matches!(f, Field::U | Field::Labels)) {
        let (_, st) = state.as_ref().expect("solved");
        write_state(&dir.join("state.csv"), st, &[])?;
        written.push("state.csv".to_string());
    }
    if which.contains(&Field::Alpha) {
        let (method, st) = state.as_ref().expect("solved");
        if *method == MethodSpec::Sa {
            return Err(CliError::config(
                "methods.list",
                "alpha needs a causal solve; SA* values are not a discrete solution".into(),
            ));
        }
        let sens = sensitivity_alphas(st, p.inst.s, None)?;
        write_state(&dir.join("alpha.csv"), st, &[("alpha", &sens.alpha)])?;
        written.push("alpha.csv".to_string());
    }
    if which.contains(&Field::Masks) {
        let inst = &p.inst;
        let u = fmm_solve(&inst.problem, &ExitSet::single(inst.t), Stop::Full)?;
        let v = fmm_solve(&inst.problem, &ExitSet::single(inst.s), Stop::Full)?;
        let heuristic = make_heuristic(cfg, &p, cfg.lambdas[0])?;
        for kind in [Provenance::Psi1, Provenance::Psi2, Provenance::Psi3] {
            let psi = compute_psi(kind, &inst.problem, inst.s, inst.t, None)?.value;
            let sets = relevance_sets(&inst.problem, &u, &v, &heuristic, inst.s, inst.t, psi)?;
            let name = format!("masks_{}.csv", kind.as_str());
            sets.write_csv(BufWriter::new(File::create(dir.join(&name))?))?;
            written.push(name);
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct ProbeSummary {
    arc_fraction: f64,
    side: i8,
    monotone: bool,
    samples: Vec<(f64, f64)>,
}

#[derive(Serialize)]
pub struct AlphaSummary {
    pub config_hash: String,
    pub m: usize,
    pub exit_mass: f64,
    pub absorbed_mass: f64,
    /// Slope of `ln alpha` against `d^2 / h` (2D only).
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: Option<usize>,
    pub all_monotone: Option<bool>,
    probes: Vec<ProbeSummary>,
}

/// Sensitivity field of a stop-at-source solve plus, in 2D, the decay fit
/// along probes perpendicular to the extracted path.
pub fn alpha_report(cfg: &ExperimentConfig, dir: &Path) -> CliResult<AlphaSummary> {
    fs::create_dir_all(dir)?;
    let p = prepare(cfg, cfg.m[0])?;
    let inst = &p.inst;
    let g = inst.grid();
    let st = fmm_solve(&inst.problem, &ExitSet::single(inst.t), Stop::AtNode(inst.s))?;
    let sens = sensitivity_alphas(&st, inst.s, None)?;
    write_state(&dir.join("alpha.csv"), &st, &[("alpha", &sens.alpha)])?;
    let mut summary = AlphaSummary {
        config_hash: cfg.hash(),
        m: g.m(),
        exit_mass: sens.exit_mass,
        absorbed_mass: sens.absorbed_mass,
        slope: None,
        intercept: None,
        points: None,
        all_monotone: None,
        probes: Vec::new(),
    };
    if g.dim() == 2 {
        let path = extract_trajectory(&st.u, g, &inst.s_pos(), &inst.t_pos(), None, None)?;
        write_trajectory(&dir.join("trajectory.csv"), &path)?;
        let fit = conjecture_decay_fit(&sens.alpha, g, &path, g.h(), &DecayOptions::default())?;
        summary.slope = Some(fit.slope);
        summary.intercept = Some(fit.intercept);
        summary.points = Some(fit.points);
        summary.all_monotone = Some(fit.all_monotone());
        summary.probes = fit
            .probes
            .into_iter()
            .map(|pr| ProbeSummary {
                arc_fraction: pr.arc_fraction,
                side: pr.side,
                monotone: pr.monotone,
                samples: pr.samples,
            })
            .collect();
    }
    let json = serde_json::to_string_pretty(&summary).map_err(|e| std::io::Error::other(e.to_string()))?;
    fs::write(dir.join("decay.json"), json + "\n")?;
    Ok(summary)
}
