//! The upwind local update.
//!
//! Given the smallest accepted neighbour value along each axis, the update
//! solves `sum_k (U - a_k)^2 = (h/f)^2` over the largest set of axes whose
//! root stays strictly above every value used, dropping the largest value
//! and retrying otherwise. With a single axis left this is the one-sided
//! update `U = a + h/f`.
//!
//! Roots are computed in shifted form: with `V = U - a_max` and
//! `d_k = a_k - a_max <= 0`,
//! `V = (sum d + sqrt((sum d)^2 - k (sum d^2 - r^2))) / k`.

use crate::error::{Error, Result};

/// Result of a local update: the new value and which axes fed it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Update {
    pub value: f64,
    /// Bit `a` set when axis `a` contributed to the root.
    pub axes: u8,
}

impl Update {
    pub fn terms(&self) -> u32 {
        self.axes.count_ones()
    }
}

/// Local update from per-axis upwind minima (`+inf` for "no accepted
/// neighbour on this axis"). Only the first `dim` entries are read.
#[inline]
pub fn local_update_axes(upwind: &[f64], h: f64, f: f64) -> Option<Update> {
    let dim = upwind.len();
    debug_assert!(dim <= 3);
    let mut vals = [(f64::INFINITY, 0u8); 3];
    let mut k = 0;
    for (a, &v) in upwind.iter().enumerate() {
        if v.is_finite() {
            vals[k] = (v, a as u8);
            k += 1;
        }
    }
    if k == 0 {
        return None;
    }
    // insertion sort on at most three entries; ties keep axis order
    for i in 1..k {
        let mut j = i;
        while j > 0 && vals[j].0 < vals[j - 1].0 {
            vals.swap(j, j - 1);
            j -= 1;
        }
    }
    let r = h / f;
    let r2 = r * r;
    while k > 1 {
        let top = vals[k - 1].0;
        let mut sd = 0.0;
        let mut sd2 = 0.0;
        for &(v, _) in &vals[..k] {
            let d = v - top;
            sd += d;
            sd2 += d * d;
        }
        let kf = k as f64;
        let disc = sd * sd - kf * (sd2 - r2);
        if disc >= 0.0 {
            let shift = (sd + disc.sqrt()) / kf;
            if shift > 0.0 {
                let mut axes = 0u8;
                for &(_, a) in &vals[..k] {
                    axes |= 1 << a;
                }
                return Some(Update {
                    value: top + shift,
                    axes,
                });
            }
        }
        k -= 1;
    }
    Some(Update {
        value: vals[0].0 + r,
        axes: 1 << vals[0].1,
    })
}

/// Two-axis convenience wrapper around [`local_update_axes`].
pub fn local_update(u_h: f64, u_v: f64, h: f64, f: f64) -> Result<f64> {
    local_update_axes(&[u_h, u_v], h, f)
        .map(|u| u.value)
        .ok_or(Error::NoUpwindValue)
}

/// Residual of the update equation for the given contributing values.
pub fn residual(u: f64, used: &[f64], h: f64, f: f64) -> f64 {
    let r = h / f;
    if used.len() == 1 {
        return (u - used[0] - r).abs();
    }
    let s: f64 = used.iter().map(|a| (u - a) * (u - a)).sum();
    // scale back to a value-sized quantity
    (s - r * r).abs() / (2.0 * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn symmetric_quadratic() {
        let u = local_update(0.0, 0.0, 0.1, 1.0).unwrap();
        assert!((u - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn one_sided() {
        assert!((local_update(0.0, INF, 0.1, 2.0).unwrap() - 0.05).abs() < 1e-15);
        let u = local_update_axes(&[INF, 0.3], 0.1, 1.0).unwrap();
        assert_eq!(u.axes, 0b10);
        assert!((u.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn causality_failure_falls_back() {
        let u = local_update_axes(&[0.0, 0.2], 0.1, 1.0).unwrap();
        assert!((u.value - 0.1).abs() < 1e-15);
        assert_eq!(u.axes, 0b01);
    }

    #[test]
    fn no_upwind() {
        assert!(matches!(local_update(INF, INF, 0.1, 1.0), Err(Error::NoUpwindValue)));
    }

    #[test]
    fn three_axes() {
        let u = local_update_axes(&[0.0, 0.0, 0.0], 0.1, 1.0).unwrap();
        assert!((u.value - 0.1 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(u.terms(), 3);
        // third value too large: drop it and solve the 2-term quadratic
        let u = local_update_axes(&[0.0, 0.0, 0.09], 0.1, 1.0).unwrap();
        assert_eq!(u.axes, 0b011);
        assert!((u.value - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn root_is_causal(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64,
                          h in 1e-3..0.2f64, f in 0.1..3.0f64, dim in 2usize..=3) {
            let vals = [a, b, c];
            let up = local_update_axes(&vals[..dim], h, f).unwrap();
            let used: Vec<f64> = (0..dim).filter(|&k| up.axes & (1 << k) != 0).map(|k| vals[k]).collect();
            for &v in &used {
                prop_assert!(up.value > v);
            }
            prop_assert!(residual(up.value, &used, h, f) <= 1e-10 * h / f);
            // never worse than the best one-sided update
            let best = vals[..dim].iter().cloned().fold(INF, f64::min);
            prop_assert!(up.value <= best + h / f + 1e-15);
        }

        #[test]
        fn monotone_in_inputs(a in 0.0..1.0f64, b in 0.0..1.0f64, bump in 0.0..0.1f64) {
            let u0 = local_update(a, b, 0.05, 1.0).unwrap();
            let u1 = local_update(a + bump, b, 0.05, 1.0).unwrap();
            prop_assert!(u1 >= u0 - 1e-15);
        }
    }
}
