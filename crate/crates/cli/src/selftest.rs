//! Quick end-to-end sanity run (a few seconds). Each check prints one line.

use eikonal_astar::analysis::{restricted_solve_with_boundary, sensitivity_alphas};
use eikonal_astar::astar::{aa_star_solve, relevance_sets, sa_star_solve, AaOptions};
use eikonal_astar::fmm::{fmm_solve, is_causal, is_monotone, local_update, max_residual, ExitSet, Label, SolverState, Stop};
use eikonal_astar::heuristics::Heuristic;
use eikonal_astar::instances::{const2d, const3d, sin2d};

use crate::config::{ExperimentConfig, InstanceSpec, MethodSpec};
use crate::error::{CliError, CliResult};
use crate::experiment::run_experiment;

type Check = (&'static str, fn() -> CliResult<bool>);

fn corner_error() -> CliResult<bool> {
    let c = const2d(101)?;
    let st = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s))?;
    let exact = c.exact.expect("closed form");
    Ok((st.value(c.s) - exact).abs() / exact < 0.02)
}

fn fmm_invariants() -> CliResult<bool> {
    let mut ok = true;
    for c in [sin2d(101)?, const3d(21)?] {
        let st = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full)?;
        ok &= is_causal(&st) && is_monotone(&st) && max_residual(&st, &c.problem) <= 1e-10;
    }
    Ok(ok)
}

fn update_minimises() -> CliResult<bool> {
    // golden-section search on the two-point semi-Lagrangian cost
    let cost = |b: f64, a: f64, c: f64, h: f64, f: f64| h * (b * b + (1.0 - b) * (1.0 - b)).sqrt() / f + b * a + (1.0 - b) * c;
    let mut ok = true;
    for &(a, c, h, f) in &[(0.0, 0.0, 0.1, 1.0), (0.3, 0.35, 0.1, 0.7), (1.0, 1.2, 0.05, 2.0), (0.5, 0.51, 0.01, 0.3)] {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - r * (hi - lo);
            let x2 = lo + r * (hi - lo);
            if cost(x1, a, c, h, f) <= cost(x2, a, c, h, f) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let best = cost(0.5 * (lo + hi), a, c, h, f).min(cost(0.0, a, c, h, f)).min(cost(1.0, a, c, h, f));
        ok &= (local_update(a, c, h, f)? - best).abs() <= 1e-8;
    }
    Ok(ok)
}

fn identical(a: &SolverState, b: &SolverState) -> bool {
    a.order == b.order && a.u.iter().zip(&b.u).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn degenerate_restrictions() -> CliResult<bool> {
    let c = sin2d(101)?;
    let stop = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s))?;
    let sa = sa_star_solve(&c.problem, c.t, c.s, &Heuristic::zero(), true)?;
    let phi = Heuristic::naive(c.s_pos(), c.problem.speed_bounds().1, 1.0)?;
    let aa = aa_star_solve(&c.problem, c.t, c.s, &phi, AaOptions::new(f64::INFINITY, 2))?;
    Ok(identical(&sa.state, &stop) && identical(&aa.state, &stop))
}

fn aa_matches_restricted_fmm() -> CliResult<bool> {
    let c = const2d(101)?;
    let phi = Heuristic::naive(c.s_pos(), 1.0, 1.0)?;
    let psi = 2f64.sqrt() * (1.0 + 0.25 * c.grid().h().sqrt());
    let aa = aa_star_solve(&c.problem, c.t, c.s, &phi, AaOptions::new(psi, 2))?;
    let inside: Vec<bool> = aa.state.label.iter().map(|&l| l == Label::Accepted).collect();
    let hat = restricted_solve_with_boundary(&c.problem, c.t, &inside, &|_| f64::INFINITY)?;
    Ok((0..inside.len()).filter(|&i| inside[i]).all(|i| (aa.state.u[i] - hat.u[i]).abs() <= 1e-13))
}

fn nested_sets() -> CliResult<bool> {
    let c = sin2d(81)?;
    let u = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full)?;
    let v = fmm_solve(&c.problem, &ExitSet::single(c.s), Stop::Full)?;
    let phi = Heuristic::naive(c.s_pos(), c.problem.speed_bounds().1, 1.0)?;
    let sets = relevance_sets(&c.problem, &u, &v, &phi, c.s, c.t, 1.1 * u.value(c.s))?;
    Ok(sets.nested())
}

fn alpha_mass() -> CliResult<bool> {
    let c = sin2d(101)?;
    let st = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s))?;
    let sens = sensitivity_alphas(&st, c.s, None)?;
    Ok((sens.exit_mass - 1.0).abs() < 1e-10 && (sens.alpha[c.t.index()] - 1.0).abs() < 1e-10)
}

fn deterministic_battery() -> CliResult<bool> {
    let cfg = ExperimentConfig {
        instance: InstanceSpec::Sin2d,
        m: vec![51, 101],
        methods: vec![MethodSpec::Fmm, MethodSpec::Bidir, MethodSpec::Sa, MethodSpec::Aa, MethodSpec::AaBb],
        lambdas: vec![0.5, 1.0],
        repeat: 1,
        threads: 4,
        deterministic: true,
        ..ExperimentConfig::default()
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    eikonal_astar::analysis::write_reports(&mut a, &run_experiment(&cfg)?)?;
    eikonal_astar::analysis::write_reports(&mut b, &run_experiment(&cfg)?)?;
    Ok(a == b)
}

const CHECKS: &[Check] = &[
    ("corner error below 2% at m=101", corner_error),
    ("FMM causal, monotone, residual <= 1e-10", fmm_invariants),
    ("local update minimises the semi-Lagrangian cost", update_minimises),
    ("SA*(phi=0) and AA*(Psi=inf) reproduce FMM bit for bit", degenerate_restrictions),
    ("AA* values equal FMM on the accepted set", aa_matches_restricted_fmm),
    ("relevance sets nested", nested_sets),
    ("sensitivity mass reaches the target", alpha_mass),
    ("battery output is deterministic", deterministic_battery),
];

pub fn run() -> CliResult<()> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        let outcome = check();
        let ok = matches!(outcome, Ok(true));
        failed += usize::from(!ok);
        match outcome {
            Err(e) => println!("FAIL {name}: {e}"),
            Ok(_) => println!("{} {name}", if ok { "PASS" } else { "FAIL" }),
        }
    }
    if failed > 0 {
        Err(CliError::Acceptance(failed))
    } else {
        Ok(())
    }
}
