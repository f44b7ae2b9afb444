//! Regime detection and the three-way strategy comparison.
//!
//! For `D_n < 2 D_m` hybrid NOMA with `T_n = D_n - D_m` is never worse than
//! either pure NOMA or OMA. From `D_n >= 2 D_m` on, OMA over the full slot
//! `D_n - D_m` reaches the hybrid lower bound `D_m (e^{N/D_m} - 1) / |h_n|^2`
//! and is selected. Pure NOMA is reported but never selected.

use std::fmt;

use crate::closed_form::{
    hybrid_energy, hybrid_log_energy, hybrid_schedule, oma_energy_n, oma_log_energy_n, oma_power_n,
    pure_noma_energy, pure_noma_log_energy, pure_noma_power,
};
use crate::model::{EnergyReport, OffloadScenario, PowerSchedule, StrategyKind};
use crate::numeric::EXP_LIMIT;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `D_n = D_m`: no own slot, OMA impossible.
    Degenerate,
    /// `D_m < D_n < 2 D_m`.
    Hybrid,
    /// `D_n = 2 D_m`: hybrid and OMA tie, OMA selected.
    Boundary,
    /// `D_n > 2 D_m`.
    OmaFavored,
}

impl Regime {
    pub fn of(s: &OffloadScenario) -> Self {
        let twice = 2.0 * s.d_m();
        if s.d_n() == s.d_m() {
            Self::Degenerate
        } else if s.d_n() < twice {
            Self::Hybrid
        } else if s.d_n() == twice {
            Self::Boundary
        } else {
            Self::OmaFavored
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Degenerate => "degenerate",
            Self::Hybrid => "hybrid",
            Self::Boundary => "boundary",
            Self::OmaFavored => "oma-favored",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonTable {
    pub hybrid: EnergyReport,
    pub pure_noma: EnergyReport,
    pub oma: EnergyReport,
    pub selected: StrategyKind,
    pub regime: Regime,
}

impl ComparisonTable {
    pub fn report(&self, kind: StrategyKind) -> &EnergyReport {
        match kind {
            StrategyKind::HybridNoma => &self.hybrid,
            StrategyKind::PureNoma => &self.pure_noma,
            StrategyKind::Oma => &self.oma,
        }
    }

    pub fn selected_report(&self) -> &EnergyReport {
        self.report(self.selected)
    }
}

fn feasible_report(
    s: &OffloadScenario,
    strategy: StrategyKind,
    schedule: PowerSchedule,
    energy: f64,
    log_energy: f64,
) -> EnergyReport {
    let overflow = log_energy > EXP_LIMIT || !energy.is_finite();
    let energy = if overflow { f64::INFINITY } else { energy };
    EnergyReport {
        strategy,
        energy,
        log_energy,
        overflow,
        phase1_energy: s.d_m() * schedule.p_n1,
        phase2_energy: schedule.t_n * schedule.p_n2,
        normalized_energy: s.h_n_sq() * energy,
        feasible: true,
        schedule: Some(schedule),
    }
}

fn infeasible_report(strategy: StrategyKind) -> EnergyReport {
    EnergyReport {
        strategy,
        energy: f64::INFINITY,
        log_energy: f64::INFINITY,
        overflow: false,
        phase1_energy: 0.0,
        phase2_energy: 0.0,
        normalized_energy: f64::INFINITY,
        feasible: false,
        schedule: None,
    }
}

/// Hybrid NOMA at the longest admissible extension `min(D_n - D_m, D_m)`.
pub fn hybrid_report(s: &OffloadScenario) -> EnergyReport {
    let t_n = s.own_slot().min(s.d_m());
    let schedule = hybrid_schedule(s, t_n).expect("extension clamped to [0, D_m]");
    let energy = hybrid_energy(s, t_n).expect("extension clamped to [0, D_m]");
    let log_energy = hybrid_log_energy(s, t_n).expect("extension clamped to [0, D_m]");
    feasible_report(s, StrategyKind::HybridNoma, schedule, energy, log_energy)
}

pub fn pure_noma_report(s: &OffloadScenario) -> EnergyReport {
    let schedule = PowerSchedule {
        p_n1: pure_noma_power(s),
        p_n2: 0.0,
        t_n: 0.0,
    };
    feasible_report(
        s,
        StrategyKind::PureNoma,
        schedule,
        pure_noma_energy(s),
        pure_noma_log_energy(s),
    )
}

/// OMA over the whole own slot; infeasible when that slot is empty.
pub fn oma_report(s: &OffloadScenario) -> EnergyReport {
    let slot = s.own_slot();
    if slot == 0.0 {
        return infeasible_report(StrategyKind::Oma);
    }
    let schedule = PowerSchedule {
        p_n1: 0.0,
        p_n2: oma_power_n(s, slot),
        t_n: slot,
    };
    feasible_report(
        s,
        StrategyKind::Oma,
        schedule,
        oma_energy_n(s, slot),
        oma_log_energy_n(s, slot),
    )
}

/// Evaluates all three strategies and selects by regime.
pub fn select_strategy(s: &OffloadScenario) -> ComparisonTable {
    let regime = Regime::of(s);
    let selected = match regime {
        Regime::Degenerate | Regime::Hybrid => StrategyKind::HybridNoma,
        Regime::Boundary | Regime::OmaFavored => StrategyKind::Oma,
    };
    ComparisonTable {
        hybrid: hybrid_report(s),
        pure_noma: pure_noma_report(s),
        oma: oma_report(s),
        selected,
        regime,
    }
}

/// Normalized gap `(D_m + x) e^{2N/(D_m + x)} - D_m e^{N/D_m} - x e^{N/x}`.
///
/// Tends to `-inf` as `x -> 0+`.
pub fn f_tn(s: &OffloadScenario, x: f64) -> f64 {
    assert!(x > 0.0, "gap function needs x > 0, got {x}");
    let (n, d_m) = (s.nats(), s.d_m());
    let shared = (d_m + x) * (2.0 * n / (d_m + x)).exp();
    let alone = x * (n / x).exp();
    if alone.is_infinite() {
        return f64::NEG_INFINITY;
    }
    shared - d_m * (n / d_m).exp() - alone
}

/// `E_hybrid(t_n) - E_oma(t_n)`, never positive on `(0, D_m]`.
pub fn noma_oma_gap(s: &OffloadScenario, t_n: f64) -> Result<f64> {
    if !(t_n > 0.0 && t_n <= s.d_m()) {
        return Err(Error::TimeExtensionOutOfRange {
            t_n,
            min: 0.0,
            max: s.d_m(),
        });
    }
    let oma = oma_energy_n(s, t_n);
    if oma.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(hybrid_energy(s, t_n)? - oma)
}

/// Infimum of the hybrid energy over `t_n in [0, D_m]`, reached at `D_m`.
pub fn hybrid_lower_bound(s: &OffloadScenario) -> f64 {
    s.d_m() * ((s.nats() / s.d_m()).exp_m1() / s.h_n_sq())
}
