//! Ready-made benchmark setups.

use crate::analysis::{extract_trajectory, integrate_cost_along, refine_in_tube, Trajectory};
use crate::error::Result;
use crate::fmm::{fmm_solve, ExitSet, Problem, Stop};
use crate::grid::{euclid, Bounds, Grid, NodeId};
use crate::speed::{cost_modified_speed, load_sampled_speed, CostField, IntensityMatrix, Observer, SpeedField};

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub problem: Problem,
    pub s: NodeId,
    pub t: NodeId,
    /// Exact `u(s)` when known in closed form.
    pub exact: Option<f64>,
}

impl Instance {
    fn build(name: &str, problem: Problem, s: &[f64], t: &[f64], exact: Option<f64>) -> Result<Self> {
        let s = problem.grid().locate(s, true)?;
        let t = problem.grid().locate(t, true)?;
        Ok(Instance {
            name: name.to_string(),
            problem,
            s,
            t,
            exact,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    pub fn s_pos(&self) -> Vec<f64> {
        self.grid().position(self.s)
    }

    pub fn t_pos(&self) -> Vec<f64> {
        self.grid().position(self.t)
    }
}

/// `f = 1` on the unit square, `s = (1, 1)`, `t = (0, 0)`.
pub fn const2d(m: usize) -> Result<Instance> {
    let p = Problem::new(Grid::new(2, m, None)?, SpeedField::constant(1.0)?)?;
    Instance::build("const2d", p, &[1.0, 1.0], &[0.0, 0.0], Some(2f64.sqrt()))
}

/// `f = 1` on the unit cube, opposite corners.
pub fn const3d(m: usize) -> Result<Instance> {
    let p = Problem::new(Grid::new(3, m, None)?, SpeedField::constant(1.0)?)?;
    Instance::build("const3d", p, &[1.0; 3], &[0.0; 3], Some(3f64.sqrt()))
}

/// `f = 1 + 0.5 sin(20 pi x) sin(20 pi y)`, `s = (0.95, 0.7)`, `t = (0.5, 0.5)`
/// (snapped to the nearest nodes).
pub fn sin2d(m: usize) -> Result<Instance> {
    let p = Problem::new(Grid::new(2, m, None)?, SpeedField::oscillatory_2d())?;
    Instance::build("sin2d", p, &[0.95, 0.7], &[0.5, 0.5], None)
}

/// `f = 1 + A sin(10 pi x) sin(10 pi y) sin(10 pi z)`,
/// `s = (0.72, 0.6, 0.8)`, `t = (0.32, 0.4, 0.36)`.
pub fn sin3d(m: usize, amplitude: f64) -> Result<Instance> {
    let p = Problem::new(Grid::new(3, m, None)?, SpeedField::oscillatory_3d(amplitude)?)?;
    Instance::build("sin3d", p, &[0.72, 0.6, 0.8], &[0.32, 0.4, 0.36], None)
}

/// Domain of the observers example: `[-0.05, 0.85] x [0, 0.9]`.
pub fn observers_bounds() -> Bounds {
    Bounds {
        min: vec![-0.05, 0.0],
        side: 0.9,
    }
}

/// `f0 = 1 + 0.99 sin(4 pi x) sin(4 pi y)`.
pub fn observers_base_speed() -> SpeedField {
    SpeedField::sinusoid(1.0, 0.99, 4.0).expect("valid constants")
}

/// `K = 1 + 2 exp(-|x - x1|^2 / 0.01) + 8 exp(-|x - x2|^2 / 0.002)`.
pub fn observers_cost() -> CostField {
    CostField::Observers(vec![
        Observer {
            center: vec![0.50, 0.77],
            amplitude: 2.0,
            width: 0.01,
        },
        Observer {
            center: vec![0.33, 0.45],
            amplitude: 8.0,
            width: 0.002,
        },
    ])
}

/// Default source and target of the observers example.
pub const OBSERVERS_S: [f64; 2] = [0.275, 0.825];
pub const OBSERVERS_T: [f64; 2] = [0.45, 0.525];

/// Half-width of the tube used to refine the time-optimal path.
pub const OBSERVERS_TUBE: f64 = 0.04;

/// The cost-weighted problem `f = f0 / K` together with the unweighted
/// problem `f0` on the same grid (used for the time-optimal reference path
/// and the higher-speed heuristic).
pub fn observers(m: usize) -> Result<(Instance, Problem)> {
    let grid = Grid::new(2, m, Some(observers_bounds()))?;
    let f0 = observers_base_speed();
    let f = cost_modified_speed(&f0, observers_cost(), &grid)?;
    let fast = Problem::new(grid.clone(), f0)?;
    let inst = Instance::build("observers", Problem::new(grid, f)?, &OBSERVERS_S, &OBSERVERS_T, None)?;
    Ok((inst, fast))
}

/// Overestimates for the observers example, both obtained by integrating
/// `K / f0` along a feasible path.
#[derive(Clone, Debug)]
pub struct ObserverBounds {
    /// Along the time-optimal path of `f0`.
    pub psi_a: f64,
    /// Along the locally cheapest path in a tube around that path.
    pub psi_b: f64,
    pub time_optimal: Trajectory,
    pub refined: Trajectory,
}

pub fn observer_bounds(inst: &Instance, fast: &Problem, tube: f64) -> Result<ObserverBounds> {
    let g = inst.grid();
    let (s, t) = (inst.s_pos(), inst.t_pos());
    let u0 = fmm_solve(fast, &ExitSet::single(inst.t), Stop::Full)?;
    let time_optimal = extract_trajectory(&u0.u, g, &s, &t, None, None)?;
    let cost = observers_cost();
    let f0 = observers_base_speed();
    let integrand = |x: &[f64]| cost.eval(x) / f0.value(x);
    let psi_a = integrate_cost_along(&time_optimal, &integrand)?;
    let refined = refine_in_tube(&inst.problem, inst.s, inst.t, &time_optimal, tube)?;
    let psi_b = integrate_cost_along(&refined, &integrand)?;
    Ok(ObserverBounds {
        psi_a,
        psi_b,
        time_optimal,
        refined,
    })
}

/// Grayscale-derived speed over the unit square.
pub fn sampled(matrix: &IntensityMatrix, m: usize, s: &[f64], t: &[f64]) -> Result<Instance> {
    let field = load_sampled_speed(matrix, &Bounds::unit(2))?;
    let p = Problem::new(Grid::new(2, m, None)?, field)?;
    Instance::build("sampled", p, s, t, None)
}

/// A deterministic synthetic intensity raster: dark background crossed by
/// bright "roads" of varying width and a few medium-grey blocks.
pub fn synthetic_intensities(rows: usize, cols: usize) -> IntensityMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let y = (r as f64 + 0.5) / rows as f64;
            let x = (c as f64 + 0.5) / cols as f64;
            let road_a = (y - (0.2 + 0.6 * x)).abs() < 0.03;
            let road_b = (x - (0.3 + 0.15 * (6.0 * y).sin())).abs() < 0.02;
            let road_c = (euclid(&[x, y], &[0.6, 0.55]) - 0.25).abs() < 0.015;
            let block = ((x * 8.0) as usize + (y * 8.0) as usize) % 3 == 0;
            let i = if road_a || road_b || road_c {
                755.0
            } else if block {
                300.0
            } else {
                60.0
            };
            data.push(i);
        }
    }
    IntensityMatrix { rows, cols, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_build() {
        let c = const2d(11).unwrap();
        assert_eq!(c.s_pos(), vec![1.0, 1.0]);
        assert_eq!(c.t_pos(), vec![0.0, 0.0]);
        let s = sin2d(401).unwrap();
        assert!((s.s_pos()[0] - 0.95).abs() < 1e-12 && (s.s_pos()[1] - 0.7).abs() < 1e-12);
        let s3 = sin3d(26, 0.35).unwrap();
        assert!((s3.t_pos()[2] - 0.36).abs() < 1e-12);
        let (o, fast) = observers(41).unwrap();
        assert_eq!(o.grid().bounds(), fast.grid().bounds());
        let (f1, f2) = o.problem.speed_bounds();
        assert!(f1 > 0.0 && f2 <= 1.99 + 1e-12);
        let b = observer_bounds(&o, &fast, OBSERVERS_TUBE).unwrap();
        assert!(b.psi_b <= b.psi_a);
        let img = synthetic_intensities(64, 64);
        let sm = sampled(&img, 51, &[0.9, 0.9], &[0.1, 0.1]).unwrap();
        let (lo, hi) = sm.problem.speed_bounds();
        assert!(lo >= 0.001 && hi <= 1.001 + 1e-12);
    }
}
