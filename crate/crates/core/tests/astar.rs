use eikonal_astar::analysis::restricted_solve_with_boundary;
use eikonal_astar::astar::*;
use eikonal_astar::fmm::{fmm_solve, ExitSet, Label, Stop};
use eikonal_astar::heuristics::{ellipse_contains, Heuristic};
use eikonal_astar::instances::{const2d, const3d, sin2d, Instance};
use eikonal_astar::Error;

fn naive(c: &Instance, lambda: f64) -> Heuristic {
    Heuristic::naive(c.s_pos(), c.problem.speed_bounds().1, lambda).unwrap()
}

fn psi_corner(c: &Instance) -> f64 {
    (1.0 + 0.25 * c.grid().h().sqrt()) * eikonal_astar::grid::euclid(&c.s_pos(), &c.t_pos())
}

#[test]
fn zero_heuristic_reduces_to_fmm() {
    for c in [const2d(81).unwrap(), sin2d(101).unwrap(), const3d(21).unwrap()] {
        let fmm = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap();
        let sa = sa_star_solve(&c.problem, c.t, c.s, &Heuristic::zero(), true).unwrap();
        assert_eq!(sa.state.order, fmm.order);
        assert_eq!(sa.state.label, fmm.label);
        assert_eq!(sa.value.to_bits(), fmm.value(c.s).to_bits());

        let aa = aa_star_solve(&c.problem, c.t, c.s, &naive(&c, 1.0), AaOptions::new(f64::INFINITY, c.grid().dim())).unwrap();
        assert!(!aa.exhausted);
        assert_eq!(aa.state.order, fmm.order);
        for i in 0..fmm.u.len() {
            assert_eq!(aa.state.u[i].to_bits(), fmm.u[i].to_bits());
        }
    }
}

#[test]
fn cached_and_lazy_heuristic_agree() {
    let c = sin2d(101).unwrap();
    let h = Heuristic::oracle(&c.problem, c.s, 0.8).unwrap();
    let a = sa_star_solve(&c.problem, c.t, c.s, &h, true).unwrap();
    let b = sa_star_solve(&c.problem, c.t, c.s, &h, false).unwrap();
    assert_eq!(a.state.order, b.state.order);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn aa_values_dominate_and_equal_restricted_fmm() {
    for (c, lambda) in [(const2d(101).unwrap(), 1.0), (sin2d(101).unwrap(), 0.9), (const3d(21).unwrap(), 1.0)] {
        let full = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full).unwrap();
        let psi = (1.0 + 0.25 * c.grid().h().sqrt()) * full.value(c.s);
        let aa = aa_star_solve(&c.problem, c.t, c.s, &naive(&c, lambda), AaOptions::exact(psi)).unwrap();
        let inside: Vec<bool> = aa.state.label.iter().map(|&l| l == Label::Accepted).collect();
        let hat = restricted_solve_with_boundary(&c.problem, c.t, &inside, &|_| f64::INFINITY).unwrap();
        for i in 0..inside.len() {
            if !inside[i] {
                continue;
            }
            assert!(aa.state.u[i] >= full.u[i] - 1e-14);
            assert!((aa.state.u[i] - hat.u[i]).abs() <= 1e-14 * hat.u[i].max(1.0), "{}: {} vs {}", c.name, aa.state.u[i], hat.u[i]);
        }
    }
}

#[test]
fn branch_and_bound_only_shrinks() {
    for c in [const2d(101).unwrap(), sin2d(101).unwrap()] {
        let psi = 1.5 * psi_corner(&c);
        let h = naive(&c, 1.0);
        let off = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::new(psi, 2)).unwrap();
        let on = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::new(psi, 2).with_bb(true)).unwrap();
        assert!(on.psi_final <= on.psi_initial);
        assert!(on.psi_final < psi, "bound never tightened");
        for i in 0..on.state.label.len() {
            if on.state.label[i] == Label::Accepted {
                assert_eq!(off.state.label[i], Label::Accepted);
            }
        }
        assert!(on.state.accepted_count() <= off.state.accepted_count());
    }
}

#[test]
fn relevance_sets_are_nested() {
    for c in [const2d(61).unwrap(), sin2d(101).unwrap(), const3d(21).unwrap()] {
        let u = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::Full).unwrap();
        let v = fmm_solve(&c.problem, &ExitSet::single(c.s), Stop::Full).unwrap();
        for lambda in [0.0, 0.5, 1.0] {
            let h = naive(&c, lambda);
            for k in [1.0, 1.05, 1.3] {
                let psi = k * u.value(c.s);
                let sets = relevance_sets(&c.problem, &u, &v, &h, c.s, c.t, psi).unwrap();
                assert!((0..sets.c2.len()).all(|i| !sets.c3[i] || sets.c2[i]));
                // C2 inside the ellipse needs phi to be the full distance bound
                if lambda == 1.0 {
                    assert!(sets.nested(), "{} k={k}", c.name);
                    let [n1, n2, n3] = sets.counts();
                    assert!(n3 <= n2 && n2 <= n1 && n3 > 0);
                }
                // C1 is the ellipse
                let (_, f2) = c.problem.speed_bounds();
                let g = c.grid();
                for i in (0..g.len()).step_by(7) {
                    let x = g.position(eikonal_astar::NodeId(i as u32));
                    let inside = ellipse_contains(&x, &c.s_pos(), &c.t_pos(), f2, psi).unwrap();
                    assert_eq!(inside, sets.c1[i]);
                }
            }
        }
    }
}

#[test]
fn relevance_sets_reject_mismatched_grids() {
    let a = const2d(21).unwrap();
    let b = const2d(31).unwrap();
    let u = fmm_solve(&a.problem, &ExitSet::single(a.t), Stop::Full).unwrap();
    let v = fmm_solve(&b.problem, &ExitSet::single(b.s), Stop::Full).unwrap();
    assert!(relevance_sets(&a.problem, &u, &v, &Heuristic::zero(), a.s, a.t, 2.0).is_err());
}

fn errors(m: usize) -> (f64, f64) {
    let c = const2d(m).unwrap();
    let u = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap().value(c.s);
    let h = naive(&c, 1.0);
    let sa = sa_star_solve(&c.problem, c.t, c.s, &h, true).unwrap();
    let aa = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::new(psi_corner(&c), 2)).unwrap();
    ((sa.value - u) / u, (aa.value - u) / u)
}

#[test]
fn sa_stagnates_while_aa_converges() {
    let runs: Vec<(f64, f64)> = [101, 201, 401].iter().map(|&m| errors(m)).collect();
    for w in runs.windows(2) {
        assert!(w[1].1 <= w[0].1, "{runs:?}");
    }
    assert!(runs[2].1 < 1e-6);
    assert!(runs.iter().all(|r| r.0 > 0.05), "{runs:?}");
}

#[test]
fn paired_errors_favour_aa_for_large_lambda() {
    let c = sin2d(201).unwrap();
    let u = fmm_solve(&c.problem, &ExitSet::single(c.t), Stop::AtNode(c.s)).unwrap().value(c.s);
    let psi = (1.0 + 0.25 * c.grid().h().sqrt()) * u;
    for lambda in [0.7, 0.9, 1.0] {
        let h = Heuristic::oracle(&c.problem, c.s, lambda).unwrap();
        let sa = sa_star_solve(&c.problem, c.t, c.s, &h, true).unwrap();
        let aa = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::new(psi, 2)).unwrap();
        assert!(aa.value - u <= sa.value - u + 1e-15, "lambda={lambda}");
    }
}

#[test]
fn overestimate_below_target_heuristic_is_rejected() {
    let c = const2d(21).unwrap();
    // phi(t) = |s - t| for the naive heuristic with lambda = 1
    let h = naive(&c, 1.0);
    let r = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::new(1.0, 2));
    assert!(matches!(r, Err(Error::InvalidOverestimate { .. })));
}

#[test]
fn exhausted_queue_returns_psi() {
    let c = const2d(51).unwrap();
    // just above phi(t) but well below u(s): s is pruned
    let psi = 2f64.sqrt() * 0.999 + 1e-9;
    let h = naive(&c, 0.999);
    let run = aa_star_solve(&c.problem, c.t, c.s, &h, AaOptions::exact(psi)).unwrap();
    assert!(run.exhausted);
    assert_eq!(run.value, psi);
}

#[test]
fn config_round_trip_and_dispatch() {
    let c = const2d(61).unwrap();
    let cfg = RestrictionConfig::aa(eikonal_astar::heuristics::HeuristicKind::Naive, 1.0, Some(psi_corner(&c)), 2);
    let back = RestrictionConfig::from_kv(&cfg.to_kv()).unwrap();
    assert_eq!(back, cfg);
    let direct = aa_star_solve(&c.problem, c.t, c.s, &naive(&c, 1.0), AaOptions::new(psi_corner(&c), 2)).unwrap();
    let via = solve_with_config(&c.problem, c.t, c.s, &cfg).unwrap();
    assert_eq!(direct.value.to_bits(), via.value.to_bits());
    assert_eq!(direct.state.order, via.state.order);
}
