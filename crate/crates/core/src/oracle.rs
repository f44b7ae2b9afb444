//! Numerical reference solver, independent of the closed forms.
//!
//! The objective grows in each power, so the rate constraint binds at any
//! optimum. At fixed `T_n` the active constraint is parametrized by the share
//! `alpha` of the `N` nats sent while sharing `D_m`:
//!
//! ```text
//! D_m y_1 = alpha N,   T_n y_2 = (1 - alpha) N
//! ```
//!
//! and the energy is minimized over `alpha in [0, 1]` by golden-section
//! search on its logarithm (the energy itself overflows for short `T_n`).

use crate::model::{is_rate_feasible, schedule_energy, OffloadScenario, PowerSchedule};
use crate::numeric::{linspace, ln_expm1, log_add_exp};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
pub const DEFAULT_T_STEPS: usize = 256;
pub const DEFAULT_RESOLUTION: usize = 200;

// 1/phi and 1/phi^2
const INV_PHI: f64 = 0.618_033_988_749_894_9;
const INV_PHI_SQ: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub p_n1: f64,
    pub p_n2: f64,
    pub t_n: f64,
    pub energy: f64,
    /// Share of the nats delivered during `D_m`.
    pub split: f64,
    pub iterations: usize,
    pub tolerance_met: bool,
}

impl OracleResult {
    pub fn schedule(&self) -> PowerSchedule {
        PowerSchedule {
            p_n1: self.p_n1,
            p_n2: self.p_n2,
            t_n: self.t_n,
        }
    }
}

/// Powers that deliver share `split` of the task during `D_m` and the rest
/// during `t_n`.
pub fn split_powers(s: &OffloadScenario, t_n: f64, split: f64) -> (f64, f64) {
    let n = s.nats();
    let y1 = split * n / s.d_m();
    let p1 = (n / s.d_m()).exp() * y1.exp_m1() / s.h_n_sq();
    let p2 = if split >= 1.0 {
        0.0
    } else {
        ((1.0 - split) * n / t_n).exp_m1() / s.h_n_sq()
    };
    (p1, p2)
}

/// Energy of the split schedule, evaluated through the objective.
pub fn split_energy(s: &OffloadScenario, t_n: f64, split: f64) -> f64 {
    let (p_n1, p_n2) = split_powers(s, t_n, split);
    schedule_energy(s, &PowerSchedule { p_n1, p_n2, t_n })
}

fn split_log_energy(s: &OffloadScenario, t_n: f64, split: f64) -> f64 {
    let n = s.nats();
    let phase1 = s.d_m().ln() + n / s.d_m() + ln_expm1(split * n / s.d_m());
    let phase2 = if split >= 1.0 {
        f64::NEG_INFINITY
    } else {
        t_n.ln() + ln_expm1((1.0 - split) * n / t_n)
    };
    log_add_exp(phase1, phase2)
}

fn result_at(s: &OffloadScenario, t_n: f64, split: f64, iterations: usize) -> OracleResult {
    let (p_n1, p_n2) = split_powers(s, t_n, split);
    let schedule = PowerSchedule { p_n1, p_n2, t_n };
    OracleResult {
        p_n1,
        p_n2,
        t_n,
        energy: schedule_energy(s, &schedule),
        split,
        iterations,
        tolerance_met: true,
    }
}

/// Minimizes the energy at fixed `t_n in (0, D_m]` to a bracket width `tol`
/// in the split variable.
pub fn oracle_fixed_t(s: &OffloadScenario, t_n: f64, tol: f64) -> Result<OracleResult> {
    if !(t_n > 0.0 && t_n <= s.d_m()) {
        return Err(Error::TimeExtensionOutOfRange {
            t_n,
            min: 0.0,
            max: s.d_m(),
        });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "tol",
            reason: format!("must be positive and finite, got {tol}"),
        });
    }

    let f = |a: f64| split_log_energy(s, t_n, a);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = lo + INV_PHI_SQ * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations, tol });
        }
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + INV_PHI_SQ * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }

    // The optimum may sit on an end of [0, 1]; keep whichever candidate wins.
    let mid = 0.5 * (lo + hi);
    let best = [mid, 0.0, 1.0]
        .into_iter()
        .map(|a| (a, f(a)))
        .fold(
            (mid, f64::INFINITY),
            |acc, c| if c.1 < acc.1 { c } else { acc },
        )
        .0;
    Ok(result_at(s, t_n, best, iterations))
}

/// Sweeps `t_n` over `t_steps` uniform points of `(0, min(D_n - D_m, D_m)]`
/// and returns the best fixed-`t_n` optimum. Ties go to the longer extension.
pub fn oracle_joint(s: &OffloadScenario, t_steps: usize, tol: f64) -> Result<OracleResult> {
    if t_steps < 2 {
        return Err(Error::InvalidArgument {
            name: "t_steps",
            reason: format!("need at least 2 grid points, got {t_steps}"),
        });
    }
    let t_max = s.own_slot().min(s.d_m());
    if t_max == 0.0 {
        // Empty extension: everything goes out while sharing D_m.
        return Ok(result_at(s, 0.0, 1.0, 0));
    }
    let mut best: Option<OracleResult> = None;
    let mut iterations = 0;
    for k in 1..=t_steps {
        let t_n = if k == t_steps {
            t_max
        } else {
            t_max * k as f64 / t_steps as f64
        };
        let r = oracle_fixed_t(s, t_n, tol)?;
        iterations += r.iterations;
        if best.is_none_or(|b| r.energy <= b.energy) {
            best = Some(r);
        }
    }
    let mut best = best.expect("t_steps >= 2");
    best.iterations = iterations;
    Ok(best)
}

/// Objective sampled over a `(P_{n,1}, P_{n,2})` grid at fixed `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub t_n: f64,
    pub p1_axis: Vec<f64>,
    pub p2_axis: Vec<f64>,
    /// Row-major, `energy[i * p2_axis.len() + j]` at `(p1_axis[i], p2_axis[j])`.
    pub energy: Vec<f64>,
    pub feasible: Vec<bool>,
}

impl SurfaceGrid {
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.p2_axis.len() + j
    }

    pub fn energy_at(&self, i: usize, j: usize) -> f64 {
        self.energy[self.index(i, j)]
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.feasible[self.index(i, j)]
    }

    /// Lowest-energy rate-feasible grid point.
    pub fn feasible_argmin(&self) -> Option<(usize, usize)> {
        let cols = self.p2_axis.len();
        self.energy
            .iter()
            .zip(&self.feasible)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .min_by(|a, b| a.1 .0.total_cmp(b.1 .0))
            .map(|(k, _)| (k / cols, k % cols))
    }

    /// Fractional grid coordinates of an arbitrary point.
    pub fn cell_coordinates(&self, p1: f64, p2: f64) -> (f64, f64) {
        let step1 = self.p1_axis[1] - self.p1_axis[0];
        let step2 = self.p2_axis[1] - self.p2_axis[0];
        (
            (p1 - self.p1_axis[0]) / step1,
            (p2 - self.p2_axis[0]) / step2,
        )
    }
}

/// Samples the objective on `[0, p1_max] x [0, p2_max]` with `resolution`
/// points per axis and marks rate-feasible points.
pub fn energy_surface(
    s: &OffloadScenario,
    t_n: f64,
    p1_max: f64,
    p2_max: f64,
    resolution: usize,
) -> Result<SurfaceGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument {
            name: "resolution",
            reason: format!("need at least 2 points per axis, got {resolution}"),
        });
    }
    for (name, v) in [("t_n", t_n), ("p1_max", p1_max), ("p2_max", p2_max)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument {
                name,
                reason: format!("must be positive and finite, got {v}"),
            });
        }
    }
    let p1_axis = linspace(0.0, p1_max, resolution);
    let p2_axis = linspace(0.0, p2_max, resolution);
    let mut energy = Vec::with_capacity(resolution * resolution);
    let mut feasible = Vec::with_capacity(resolution * resolution);
    for &p_n1 in &p1_axis {
        for &p_n2 in &p2_axis {
            let p = PowerSchedule { p_n1, p_n2, t_n };
            energy.push(schedule_energy(s, &p));
            feasible.push(is_rate_feasible(s, &p));
        }
    }
    Ok(SurfaceGrid {
        t_n,
        p1_axis,
        p2_axis,
        energy,
        feasible,
    })
}

/// Default plot window `[0, 2 P_{n,1}*] x [0, 2 P_{n,2}*]`, which centers the
/// closed-form optimum. Falls back to the OMA power when `P_{n,1}* = 0`.
pub fn default_surface_ranges(s: &OffloadScenario, t_n: f64) -> Result<(f64, f64)> {
    let (p1, p2) = crate::closed_form::hybrid_powers(s, t_n)?;
    let fallback = (s.nats() / s.d_m()).exp_m1() / s.h_n_sq();
    let p1_max = if p1 > 0.0 { 2.0 * p1 } else { fallback };
    let p2_max = if p2 > 0.0 { 2.0 * p2 } else { fallback };
    Ok((p1_max, p2_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::offloaded_nats;

    fn reference() -> OffloadScenario {
        OffloadScenario::new(15.0, 20.0, 25.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn fixed_t_reproduces_reference_point() {
        let s = reference();
        let r = oracle_fixed_t(&s, 5.0, 1e-10).unwrap();
        assert!(r.tolerance_met);
        assert!(r.iterations <= MAX_ITERATIONS);
        assert!((r.energy - 35.662_922_736_160_19).abs() < 1e-8);
        assert!((r.p_n1 - 1.203_116).abs() < 1e-5);
        assert!((r.p_n2 - 2.320_117).abs() < 1e-5);
        let nats = offloaded_nats(&s, &r.schedule());
        assert!((nats - 15.0).abs() <= 1e-9 * 15.0);
    }

    #[test]
    fn fixed_t_boundary_case() {
        let s = reference();
        let r = oracle_fixed_t(&s, 20.0, 1e-10).unwrap();
        assert!((r.energy - 22.340_000_332_253_49).abs() < 1e-7);
        assert!(r.p_n1 < 1e-8);
        // dE/d(split) vanishes at split = 0 here, so the split is only
        // resolved to about sqrt(eps).
        assert!(r.split < 1e-6);
    }

    #[test]
    fn full_split_is_pure_noma() {
        let s = reference();
        let e = split_energy(&s, 5.0, 1.0);
        assert!((e - crate::closed_form::pure_noma_energy(&s)).abs() < 1e-12);
    }

    #[test]
    fn fixed_t_rejects_bad_inputs() {
        let s = reference();
        assert!(matches!(
            oracle_fixed_t(&s, 0.0, 1e-10),
            Err(Error::TimeExtensionOutOfRange { .. })
        ));
        assert!(oracle_fixed_t(&s, 21.0, 1e-10).is_err());
        assert!(matches!(
            oracle_fixed_t(&s, 5.0, 0.0),
            Err(Error::InvalidArgument { name: "tol", .. })
        ));
    }

    #[test]
    fn fixed_t_reports_non_convergence() {
        let s = reference();
        assert!(matches!(
            oracle_fixed_t(&s, 5.0, 1e-300),
            Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
                ..
            })
        ));
    }

    #[test]
    fn fixed_t_beats_split_grid() {
        let s = reference();
        let r = oracle_fixed_t(&s, 5.0, 1e-6).unwrap();
        for k in 0..=10_000 {
            let e = split_energy(&s, 5.0, k as f64 / 10_000.0);
            assert!(r.energy <= e + 1e-9, "split {k}");
        }
    }

    #[test]
    fn short_extension_does_not_overflow() {
        let s = OffloadScenario::new(40.0, 1.0, 1.0001, 1.0, 1.0).unwrap();
        let r = oracle_fixed_t(&s, 1e-4, 1e-10).unwrap();
        let closed = crate::closed_form::hybrid_energy(&s, 1e-4).unwrap();
        assert!(((r.energy - closed) / closed).abs() < 1e-5);
    }

    #[test]
    fn joint_lands_on_upper_endpoint() {
        let s = reference();
        let r = oracle_joint(&s, 100, 1e-10).unwrap();
        assert_eq!(r.t_n, 5.0);
        assert!((r.energy - 35.662_922_736_160_19).abs() < 1e-8);

        let tight = s.with_d_n(21.0).unwrap();
        let r = oracle_joint(&tight, 100, 1e-10).unwrap();
        assert_eq!(r.t_n, 1.0);
        let closed = crate::closed_form::hybrid_energy(&tight, 1.0).unwrap();
        assert!((r.energy - closed).abs() < 1e-5);
    }

    #[test]
    fn joint_degenerate_is_pure_noma() {
        let s = reference().with_d_n(20.0).unwrap();
        let r = oracle_joint(&s, 100, 1e-10).unwrap();
        assert_eq!(r.t_n, 0.0);
        assert_eq!(r.p_n2, 0.0);
        let pure = crate::closed_form::pure_noma_energy(&s);
        assert!((r.energy - pure).abs() < 1e-12);
        assert!(oracle_joint(&s, 1, 1e-10).is_err());
    }

    #[test]
    fn surface_shape_and_mask() {
        let s = reference();
        let g = energy_surface(&s, 5.0, 2.4, 4.6, 50).unwrap();
        assert_eq!(g.energy.len(), 2500);
        assert!(!g.is_feasible(0, 0));
        for i in 0..50 {
            for j in 0..50 {
                let e = 20.0 * g.p1_axis[i] + 5.0 * g.p2_axis[j];
                assert!((g.energy_at(i, j) - e).abs() < 1e-12);
                let p = PowerSchedule {
                    p_n1: g.p1_axis[i],
                    p_n2: g.p2_axis[j],
                    t_n: 5.0,
                };
                assert_eq!(g.is_feasible(i, j), offloaded_nats(&s, &p) >= 15.0);
            }
        }
        assert!(energy_surface(&s, 5.0, 2.4, 4.6, 1).is_err());
    }

    #[test]
    fn surface_minimum_is_never_below_closed_form() {
        let s = reference();
        let (p1m, p2m) = default_surface_ranges(&s, 5.0).unwrap();
        let g = energy_surface(&s, 5.0, p1m, p2m, DEFAULT_RESOLUTION).unwrap();
        let (i, j) = g.feasible_argmin().unwrap();
        let closed = crate::closed_form::hybrid_energy(&s, 5.0).unwrap();
        let cell = 20.0 * g.p1_axis[1] + 5.0 * g.p2_axis[1];
        assert!(g.energy_at(i, j) >= closed);
        assert!(g.energy_at(i, j) - closed <= cell);
    }
}
