//! Closed-form optima for user `n`.
//!
//! With `x_1 = 1 + e^{-N/D_m}|h_n|^2 P_{n,1}`, `x_2 = 1 + |h_n|^2 P_{n,2}` and
//! `y_i = ln x_i`, the problem at fixed `T_n` becomes a geometric program
//! whose KKT point has the active rate constraint `D_m y_1 + T_n y_2 = N` and
//! the coupling `y_2 = y_1 + N/D_m`. Solving both gives
//!
//! ```text
//! y_1 = N (D_m - T_n) / (D_m (D_m + T_n)),   y_2 = 2N / (D_m + T_n)
//! ```
//!
//! The normalized energy `g(T_n) = |h_n|^2 E(T_n)` has derivative
//! `kernel(2N / (D_m + T_n))` with `kernel(x) = e^x (1 - x) - 1 <= 0`, so the
//! whole extension `T_n = D_n - D_m` is optimal whenever `D_n < 2 D_m`.

use crate::model::{OffloadScenario, PowerSchedule};
use crate::numeric::{ln_expm1, log_add_exp};
use crate::{Error, Result};

/// Log-domain rate variables of the transformed problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktPoint {
    pub y1: f64,
    pub y2: f64,
}

impl KktPoint {
    /// `D_m y_1 + T_n y_2 - N`; zero when the rate constraint is active.
    pub fn constraint_residual(&self, s: &OffloadScenario, t_n: f64) -> f64 {
        s.d_m() * self.y1 + t_n * self.y2 - s.nats()
    }

    /// `(y_2 - y_1) - N/D_m`; exactly zero for points from [`kkt_log_vars`].
    pub fn coupling_residual(&self, s: &OffloadScenario) -> f64 {
        (self.y2 - self.y1) - s.nats() / s.d_m()
    }
}

fn check_extension(s: &OffloadScenario, t_n: f64) -> Result<()> {
    if t_n.is_finite() && (0.0..=s.d_m()).contains(&t_n) {
        Ok(())
    } else {
        Err(Error::TimeExtensionOutOfRange {
            t_n,
            min: 0.0,
            max: s.d_m(),
        })
    }
}

/// User `m`'s OMA power, solving `D_m ln(1 + P |h_m|^2) = N`.
pub fn oma_power_m(s: &OffloadScenario) -> f64 {
    (s.nats() / s.d_m()).exp_m1() / s.h_m_sq()
}

/// Power user `n` needs to deliver all `N` nats alone in a slot of length `t`.
pub fn oma_power_n(s: &OffloadScenario, t: f64) -> f64 {
    assert!(t >= 0.0, "slot length must be non-negative, got {t}");
    if t == 0.0 {
        return f64::INFINITY;
    }
    (s.nats() / t).exp_m1() / s.h_n_sq()
}

/// OMA energy `t (e^{N/t} - 1) / |h_n|^2`; `+inf` for an empty slot.
pub fn oma_energy_n(s: &OffloadScenario, t: f64) -> f64 {
    if t == 0.0 {
        return f64::INFINITY;
    }
    t * oma_power_n(s, t)
}

/// Natural log of [`oma_energy_n`], finite even when the energy overflows.
pub fn oma_log_energy_n(s: &OffloadScenario, t: f64) -> f64 {
    assert!(t >= 0.0, "slot length must be non-negative, got {t}");
    if t == 0.0 {
        return f64::INFINITY;
    }
    t.ln() + ln_expm1(s.nats() / t) - s.h_n_sq().ln()
}

/// Log-domain optimum at fixed `t_n`.
pub fn kkt_log_vars(s: &OffloadScenario, t_n: f64) -> Result<KktPoint> {
    check_extension(s, t_n)?;
    let (n, d_m) = (s.nats(), s.d_m());
    let coupling = n / d_m;
    let y2 = n * (d_m - t_n) / (d_m * (d_m + t_n)) + coupling;
    // coupling <= y2 <= 2 coupling, so both subtractions below are exact and
    // y2 - y1 reproduces N/D_m bit for bit.
    Ok(KktPoint {
        y1: y2 - coupling,
        y2,
    })
}

/// Optimal `(P_{n,1}, P_{n,2})` for a given extension `t_n in [0, D_m]`.
pub fn hybrid_powers(s: &OffloadScenario, t_n: f64) -> Result<(f64, f64)> {
    let y = kkt_log_vars(s, t_n)?;
    let p1 = (s.nats() / s.d_m()).exp() * y.y1.exp_m1() / s.h_n_sq();
    let p2 = y.y2.exp_m1() / s.h_n_sq();
    Ok((p1, p2))
}

pub fn hybrid_schedule(s: &OffloadScenario, t_n: f64) -> Result<PowerSchedule> {
    let (p_n1, p_n2) = hybrid_powers(s, t_n)?;
    Ok(PowerSchedule { p_n1, p_n2, t_n })
}

/// `T_n* = D_n - D_m`, valid only in the hybrid regime `D_n < 2 D_m`.
pub fn optimal_time_extension(s: &OffloadScenario) -> Result<f64> {
    if s.d_n() >= 2.0 * s.d_m() {
        return Err(Error::RegimeViolation {
            d_m: s.d_m(),
            d_n: s.d_n(),
        });
    }
    Ok(s.own_slot())
}

/// Hybrid-NOMA energy at extension `t_n`.
pub fn hybrid_energy(s: &OffloadScenario, t_n: f64) -> Result<f64> {
    let (p1, p2) = hybrid_powers(s, t_n)?;
    Ok(s.d_m() * p1 + t_n * p2)
}

/// Natural log of [`hybrid_energy`], finite when the energy overflows.
pub fn hybrid_log_energy(s: &OffloadScenario, t_n: f64) -> Result<f64> {
    let y = kkt_log_vars(s, t_n)?;
    let phase1 = s.d_m().ln() + s.nats() / s.d_m() + ln_expm1(y.y1);
    let phase2 = if t_n == 0.0 {
        f64::NEG_INFINITY
    } else {
        t_n.ln() + ln_expm1(y.y2)
    };
    Ok(log_add_exp(phase1, phase2) - s.h_n_sq().ln())
}

/// `P_{n,1}` when the whole task goes out during `D_m`.
pub fn pure_noma_power(s: &OffloadScenario) -> f64 {
    let r = s.nats() / s.d_m();
    r.exp() * r.exp_m1() / s.h_n_sq()
}

/// `D_m (e^{N/D_m} - 1) e^{N/D_m} / |h_n|^2`.
pub fn pure_noma_energy(s: &OffloadScenario) -> f64 {
    s.d_m() * pure_noma_power(s)
}

pub fn pure_noma_log_energy(s: &OffloadScenario) -> f64 {
    let r = s.nats() / s.d_m();
    s.d_m().ln() + r + ln_expm1(r) - s.h_n_sq().ln()
}

/// `e^x (1 - x) - 1`, non-increasing on `x >= 0` and zero at the origin.
pub fn derivative_kernel(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // -sum_{k>=2} (k-1) x^k / k!
        let x2 = x * x;
        -x2 * (0.5 + x * (1.0 / 3.0 + x * (1.0 / 8.0 + x / 30.0)))
    } else {
        x.exp_m1() - x * x.exp()
    }
}

/// `d g / d T_n` of the normalized hybrid energy `g = |h_n|^2 E`.
pub fn energy_derivative(s: &OffloadScenario, t_n: f64) -> Result<f64> {
    check_extension(s, t_n)?;
    Ok(derivative_kernel(2.0 * s.nats() / (s.d_m() + t_n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_HYBRID_T5: f64 = 35.662_922_736_160_194;
    const P1_T5: f64 = 1.203_116_906_123_872_8;
    const P2_T5: f64 = 2.320_116_922_736_547_5;
    const E_PURE: f64 = 47.293_781_074_507_803;
    const LOWER_BOUND: f64 = 22.340_000_332_253_493;

    fn reference() -> OffloadScenario {
        OffloadScenario::new(15.0, 20.0, 25.0, 1.0, 1.0).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Brute force over P_{n,1} on the active constraint, then refine.
    fn grid_search_fixed_t(s: &OffloadScenario, t: f64) -> (f64, f64, f64) {
        let h = s.h_n_sq();
        let shrink = (-s.nats() / s.d_m()).exp();
        let p1_max = ((s.nats() / s.d_m()).exp() - 1.0) / (shrink * h);
        let energy = |p1: f64| {
            let left = s.nats() - s.d_m() * (shrink * h * p1).ln_1p();
            let p2 = ((left.max(0.0) / t).exp() - 1.0) / h;
            (s.d_m() * p1 + t * p2, p2)
        };
        let (mut lo, mut hi) = (0.0, p1_max);
        let mut best = (0.0, f64::INFINITY);
        for _ in 0..12 {
            let step = (hi - lo) / 1000.0;
            for k in 0..=1000 {
                let p1 = lo + step * k as f64;
                let (e, _) = energy(p1);
                if e < best.1 {
                    best = (p1, e);
                }
            }
            lo = (best.0 - step).max(0.0);
            hi = (best.0 + step).min(p1_max);
        }
        let (e, p2) = energy(best.0);
        (best.0, p2, e)
    }

    #[test]
    fn oma_power_m_matches_root_finder() {
        let s = reference();
        let root = bisect(|p| 20.0 * (1.0 + p).ln() - 15.0, 0.0, 10.0);
        assert!((oma_power_m(&s) - root).abs() < 1e-12);
        assert!((oma_power_m(&s) - 1.117_000).abs() < 1e-6);

        let tiny = OffloadScenario::new(1e-12, 20.0, 25.0, 1.0, 1.0).unwrap();
        assert!((oma_power_m(&tiny) - 5e-14).abs() < 1e-20);

        let strong = OffloadScenario::new(15.0, 20.0, 25.0, 4.0, 1.0).unwrap();
        assert!((oma_power_m(&strong) - 0.279_250).abs() < 1e-6);
        assert!((oma_power_m(&strong) * 4.0 - oma_power_m(&s)).abs() < 1e-15);
    }

    #[test]
    fn oma_energy_examples() {
        let s = reference();
        assert!((oma_energy_n(&s, 5.0) - 95.427_684_615_938_34).abs() < 1e-9);
        assert_eq!(oma_energy_n(&s, 0.0), f64::INFINITY);
        assert!((oma_energy_n(&s, 30.0) - 19.461_638_121_003_844).abs() < 1e-10);
        // Same value via the rate constraint with P_{n,1} forced to zero.
        let p2 = bisect(|p| 5.0 * (1.0 + p).ln() - 15.0, 0.0, 100.0);
        assert!((oma_energy_n(&s, 5.0) - 5.0 * p2).abs() < 1e-9);
    }

    #[test]
    fn oma_log_energy_survives_overflow() {
        let s = reference();
        assert!((oma_log_energy_n(&s, 5.0) - oma_energy_n(&s, 5.0).ln()).abs() < 1e-13);
        assert_eq!(oma_energy_n(&s, 1e-3), f64::INFINITY);
        let log = oma_log_energy_n(&s, 1e-3);
        assert!((log - (1e-3f64.ln() + 15_000.0)).abs() < 1e-9);
        assert_eq!(oma_log_energy_n(&s, 0.0), f64::INFINITY);
    }

    #[test]
    fn hybrid_powers_match_grid_search() {
        let s = reference();
        let (p1, p2) = hybrid_powers(&s, 5.0).unwrap();
        let (g1, g2, ge) = grid_search_fixed_t(&s, 5.0);
        assert!((p1 - g1).abs() < 1e-5, "{p1} vs {g1}");
        assert!((p2 - g2).abs() < 1e-5, "{p2} vs {g2}");
        assert!((hybrid_energy(&s, 5.0).unwrap() - ge).abs() < 1e-8);
        assert!((p1 - P1_T5).abs() < 1e-12);
        assert!((p2 - P2_T5).abs() < 1e-12);
        assert!((p1 - 1.203_116).abs() < 1e-5 && (p2 - 2.320_117).abs() < 1e-5);
    }

    #[test]
    fn hybrid_powers_limits() {
        let s = reference();
        let (p1, p2) = hybrid_powers(&s, 0.0).unwrap();
        assert!((p1 - 2.364_689_053_725_390).abs() < 1e-12);
        assert!((p2 - 3.481_689_070_338_065).abs() < 1e-12);
        assert_eq!(p1, pure_noma_power(&s));

        let (p1, p2) = hybrid_powers(&s, 20.0).unwrap();
        assert_eq!(p1, 0.0);
        assert!((p2 - 1.117_000_016_612_675).abs() < 1e-12);
    }

    #[test]
    fn extension_out_of_range() {
        let s = reference();
        for t in [-0.1, 20.5, f64::NAN] {
            assert!(matches!(
                hybrid_powers(&s, t),
                Err(Error::TimeExtensionOutOfRange { .. })
            ));
            assert!(kkt_log_vars(&s, t).is_err());
            assert!(energy_derivative(&s, t).is_err());
        }
    }

    #[test]
    fn kkt_log_vars_examples() {
        let s = reference();
        let y = kkt_log_vars(&s, 5.0).unwrap();
        assert!((y.y1 - 0.45).abs() < 1e-15);
        assert!((y.y2 - 1.2).abs() < 1e-15);
        assert!(y.constraint_residual(&s, 5.0).abs() < 1e-12);
        assert_eq!(y.coupling_residual(&s), 0.0);

        let y = kkt_log_vars(&s, 20.0).unwrap();
        assert_eq!((y.y1, y.y2), (0.0, 0.75));
        let y = kkt_log_vars(&s, 0.0).unwrap();
        assert_eq!((y.y1, y.y2), (0.75, 1.5));
    }

    #[test]
    fn optimal_extension_examples() {
        let s = reference();
        assert_eq!(optimal_time_extension(&s).unwrap(), 5.0);
        assert_eq!(
            optimal_time_extension(&s.with_d_n(20.0).unwrap()).unwrap(),
            0.0
        );
        assert!(matches!(
            optimal_time_extension(&s.with_d_n(45.0).unwrap()),
            Err(Error::RegimeViolation { .. })
        ));
        assert!(optimal_time_extension(&s.with_d_n(40.0).unwrap()).is_err());
    }

    #[test]
    fn hybrid_energy_examples() {
        let s = reference();
        assert!((hybrid_energy(&s, 5.0).unwrap() - E_HYBRID_T5).abs() < 1e-10);
        assert!((hybrid_energy(&s, 5.0).unwrap() - 35.66291).abs() < 1e-4);
        assert!((hybrid_energy(&s, 0.0).unwrap() - E_PURE).abs() < 1e-10);
        assert!((hybrid_energy(&s, 20.0).unwrap() - LOWER_BOUND).abs() < 1e-10);
        let log = hybrid_log_energy(&s, 5.0).unwrap();
        assert!((log - E_HYBRID_T5.ln()).abs() < 1e-13);
        assert!((hybrid_log_energy(&s, 0.0).unwrap() - E_PURE.ln()).abs() < 1e-13);
        assert!((hybrid_log_energy(&s, 20.0).unwrap() - LOWER_BOUND.ln()).abs() < 1e-13);
    }

    #[test]
    fn pure_noma_examples() {
        let s = reference();
        assert!((pure_noma_energy(&s) - E_PURE).abs() < 1e-10);
        assert!((pure_noma_energy(&s) - hybrid_energy(&s, 0.0).unwrap()).abs() < 1e-12);
        let s2 = s.with_h_n_sq(2.0).unwrap();
        assert!((pure_noma_energy(&s2) - 23.646_890_537_253_90).abs() < 1e-10);
        let tiny = OffloadScenario::new(1e-300, 20.0, 25.0, 1.0, 1.0).unwrap();
        assert!(pure_noma_energy(&tiny) < 1e-290);
        assert!((pure_noma_log_energy(&s) - E_PURE.ln()).abs() < 1e-13);
    }

    #[test]
    fn derivative_kernel_values() {
        assert_eq!(derivative_kernel(0.0), 0.0);
        assert!((derivative_kernel(1.0) + 1.0).abs() < 1e-15);
        assert!((derivative_kernel(1.2) + 1.664_023_384_547_309_5).abs() < 1e-13);
        // series branch against high-precision references
        assert!((derivative_kernel(5e-4) / -1.250_416_744_802_084_4e-7 - 1.0).abs() < 1e-14);
        assert!((derivative_kernel(-5e-4) / -1.249_583_411_447_917_8e-7 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_derivative_matches_finite_difference() {
        let s = reference();
        let d = energy_derivative(&s, 5.0).unwrap();
        assert!((d + 1.664_023).abs() < 1e-6);
        let h = 1e-6 * s.d_m();
        let g = |t: f64| hybrid_energy(&s, t).unwrap() * s.h_n_sq();
        let fd = (g(5.0 + h) - g(5.0 - h)) / (2.0 * h);
        assert!(((fd - d) / d).abs() < 1e-4, "fd {fd} vs {d}");
    }

    #[test]
    fn energy_derivative_scales_with_gain_only_through_normalization() {
        let s = reference().with_h_n_sq(3.0).unwrap();
        let h = 1e-6 * s.d_m();
        let g = |t: f64| hybrid_energy(&s, t).unwrap() * s.h_n_sq();
        let fd = (g(12.0 + h) - g(12.0 - h)) / (2.0 * h);
        let d = energy_derivative(&s, 12.0).unwrap();
        assert!(((fd - d) / d).abs() < 1e-4);
    }
}
