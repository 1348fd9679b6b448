mod common;

use eikonal_astar::analysis::*;
use eikonal_astar::fmm::{fmm_solve, ExitSet, Problem, Stop};
use eikonal_astar::grid::{Grid, NodeId};
use eikonal_astar::instances::{const2d, sin2d, Instance};
use eikonal_astar::speed::SpeedField;
use rand::Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// One truncation: checks every part of the restriction observation and
/// both error bounds, returning the observed increase of `U(s)`.
fn check_truncation(c: &Instance, u: &[f64], alpha: &[f64], inside: &[bool], qshift: f64) -> f64 {
    let g = c.grid();
    let xi = outer_boundary(g, inside);
    assert!(!xi.is_empty());

    // part 1: exact penalties reproduce U
    let bar = restricted_solve_with_boundary(&c.problem, c.t, inside, &|x| u[x.index()]).unwrap();
    // part 2: larger penalties never decrease it
    let bar_hi = restricted_solve_with_boundary(&c.problem, c.t, inside, &|x| u[x.index()] * (1.0 + qshift) + qshift).unwrap();
    // Uhat: no way out through the boundary
    let hat = restricted_solve_with_boundary(&c.problem, c.t, inside, &|_| f64::INFINITY).unwrap();
    // part 5: a computable bound on Uhat
    let (f1, _) = c.problem.speed_bounds();
    let cap = grid_path_bound(g, inside, c.t) / f1;
    assert!(cap.is_finite());
    // part 4: a penalty at least that large gives back Uhat
    let bar_cap = restricted_solve_with_boundary(&c.problem, c.t, inside, &|_| cap).unwrap();

    for i in 0..g.len() {
        if !inside[i] {
            continue;
        }
        assert!(close(bar.u[i], u[i]), "part 1 at {i}: {} vs {}", bar.u[i], u[i]);
        assert!(bar_hi.u[i] >= u[i] - 1e-14, "part 2 at {i}");
        assert!(hat.u[i] >= bar_hi.u[i] - 1e-14, "part 3 at {i}");
        assert!(hat.u[i] <= cap + 1e-12, "part 5 at {i}");
        assert!(close(bar_cap.u[i], hat.u[i]), "part 4 at {i}: {} vs {}", bar_cap.u[i], hat.u[i]);
    }

    let s = c.s.index();
    let gap = hat.u[s] - u[s];
    let q = |x: NodeId| u[x.index()] * (1.0 + qshift) + qshift;
    let b1 = restriction_error_bound(alpha, &xi, Penalty::Exit(&q), u).unwrap();
    assert!(bar_hi.u[s] - u[s] <= b1 + 1e-12, "first bound: {} > {b1}", bar_hi.u[s] - u[s]);
    let b2 = restriction_error_bound(alpha, &xi, Penalty::Constant(cap), u).unwrap();
    assert!(gap <= b2 + 1e-12, "second bound: {gap} > {b2}");
    gap
}

#[test]
fn restriction_observation_and_bounds_on_random_truncations() {
    let c = sin2d(101).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full).unwrap();
    let sens = sensitivity_alphas(&full, c.s, None).unwrap();
    let mut rng = common::rng(61);
    let mut positive = 0;
    for _ in 0..20 {
        let inside = common::random_truncation(c.grid(), c.s, c.t, &mut rng);
        let shift = rng.gen_range(0.0..0.5);
        if check_truncation(&c, &full.u, &sens.alpha, &inside, shift) > 1e-12 {
            positive += 1;
        }
    }
    // the random waypoint usually forces a detour
    assert!(positive >= 5, "{positive}");
}

#[test]
fn error_bound_is_negligible_far_from_the_path() {
    let c = const2d(201).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full).unwrap();
    let sens = sensitivity_alphas(&full, c.s, None).unwrap();
    let g = c.grid();
    let h = g.h();
    // every point of the unit square is within 0.71 of the diagonal, so
    // "far" has to stay below that
    let d = 4.0 * h.sqrt();
    let inside: Vec<bool> = (0..g.len())
        .map(|i| {
            let p = g.position(NodeId(i as u32));
            (p[0] - p[1]).abs() / 2f64.sqrt() < d
        })
        .collect();
    let xi = outer_boundary(g, &inside);
    let cap = grid_path_bound(g, &inside, c.t);
    let bound = restriction_error_bound(&sens.alpha, &xi, Penalty::Constant(cap), &full.u).unwrap();
    assert!(bound < 1e-6 * full.value(c.s), "{bound}");
    assert!(check_truncation(&c, &full.u, &sens.alpha, &inside, 0.1) <= bound + 1e-12);
}

#[test]
fn cutting_the_path_costs_something_and_the_bound_sees_it() {
    let c = const2d(101).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full).unwrap();
    let sens = sensitivity_alphas(&full, c.s, None).unwrap();
    let g = c.grid();
    // a wall across the diagonal with gaps at both ends
    let inside: Vec<bool> = (0..g.len())
        .map(|i| {
            let ij = g.multi_index(NodeId(i as u32));
            !(ij[0] + ij[1] == 100 && (25..=75).contains(&ij[0]))
        })
        .collect();
    let gap = check_truncation(&c, &full.u, &sens.alpha, &inside, 0.2);
    assert!(gap > 1e-3, "{gap}");
}

#[test]
fn alpha_conserves_mass() {
    let c = sin2d(101).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap();
    let sens = sensitivity_alphas(&full, c.s, None).unwrap();
    assert_eq!(sens.alpha[c.s.index()], 1.0);
    assert!((sens.alpha[c.t.index()] - 1.0).abs() < 1e-10);
    assert!((sens.exit_mass - 1.0).abs() < 1e-10);

    let mut rng = common::rng(3);
    let cut = common::random_truncation(c.grid(), c.s, c.t, &mut rng);
    let absorbing: Vec<bool> = cut.iter().map(|&b| !b).collect();
    let part = sensitivity_alphas(&full, c.s, Some(&absorbing)).unwrap();
    assert!((part.exit_mass + part.absorbed_mass - 1.0).abs() < 1e-10);
    for i in 0..part.alpha.len() {
        assert!(part.alpha[i] <= sens.alpha[i] + 1e-12);
    }
}

#[test]
fn dependency_graph_covers_the_square_for_corner_placement() {
    let c = const2d(41).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap();
    let graph = dependency_graph(&full, c.s).unwrap();
    assert_eq!(graph.len(), full.accepted_count());
    let next = c.grid().node_at(&[1, 0]);
    assert_eq!(full.record(next).parents(), &[c.t]);
}

#[test]
fn alpha_matches_monte_carlo_walks() {
    let p = Problem::new(Grid::new(2, 51, None).unwrap(), SpeedField::constant(1.0).unwrap()).unwrap();
    let g = p.grid();
    let s = g.locate(&[0.9, 0.64], true).unwrap();
    let t = g.locate(&[0.12, 0.2], true).unwrap();
    let st = fmm_solve(&p, &ExitSet::single(t), Stop::AtNode(s)).unwrap();
    let alpha = sensitivity_alphas(&st, s, None).unwrap().alpha;
    let walks = 1_000_000;
    let visits = common::monte_carlo_visits(&st, s, walks, 20_24);

    // twenty nodes with non-degenerate probabilities, spread over the range
    let mut cand: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.01 && alpha[i] < 0.99).collect();
    assert!(cand.len() >= 20);
    cand.sort_by(|&a, &b| alpha[a].total_cmp(&alpha[b]));
    let probes: Vec<usize> = (0..20).map(|k| cand[k * (cand.len() - 1) / 19]).collect();
    for i in probes {
        let est = visits[i] as f64 / walks as f64;
        let se = (alpha[i] * (1.0 - alpha[i]) / walks as f64).sqrt();
        assert!((est - alpha[i]).abs() <= 3.0 * se, "node {i}: alpha {} vs {est} (se {se})", alpha[i]);
    }
    assert_eq!(visits[t.index()], walks as u64);
}

#[test]
fn alpha_decays_away_from_the_path() {
    for m in [101, 201, 401] {
        let c = const2d(m).unwrap();
        let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap();
        let alpha = sensitivity_alphas(&full, c.s, None).unwrap().alpha;
        let g = c.grid();
        let path = extract_trajectory(&full.u, g, &c.s_pos(), &c.t_pos(), None, None).unwrap();
        let fit = conjecture_decay_fit(&alpha, g, &path, g.h(), &DecayOptions::default()).unwrap();
        assert!(fit.slope < 0.0, "m={m}: {}", fit.slope);
        assert!(fit.all_monotone(), "m={m}");
        // on the path beats off the path at the same arc position
        for probe in &fit.probes {
            let on = probe.samples[0].1;
            assert!(probe.samples.iter().all(|&(_, a)| a <= on));
        }
    }
}

#[test]
fn trajectory_follows_the_diagonal() {
    let c = const2d(201).unwrap();
    let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap();
    let path = extract_trajectory(&full.u, c.grid(), &c.s_pos(), &c.t_pos(), None, None).unwrap();
    let diag = Trajectory::from_points(vec![c.s_pos(), c.t_pos()]);
    assert!(path.hausdorff(&diag) < 2.0 * c.grid().h());
    let len = integrate_cost_along(&path, &|_| 1.0).unwrap();
    assert!((len - 2f64.sqrt()).abs() < 0.01);
}

#[test]
fn metrics_match_definitions() {
    let r = compute_metrics(1.127, 1.0, None, 10, 5, 10, 2).unwrap();
    assert!((r.e_star_n - 0.127).abs() < 1e-12);
    assert!((r.p - 0.15).abs() < 1e-12);
    let all = compute_metrics(1.0, 1.0, Some(1.0), 60, 40, 10, 2).unwrap();
    assert_eq!(all.p, 1.0);
    assert!(compute_metrics(1.0, 0.0, None, 1, 1, 10, 2).is_err());
}

