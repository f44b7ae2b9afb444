//! Scenario types and direct evaluation of the offloading objective.
//!
//! Noise power is normalized to one, so a channel gain `|h|^2` is the SNR
//! obtained per unit transmit power. Time and energy carry abstract,
//! normalized units.

use std::fmt;

use crate::{Error, Result};

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// One user's task: `nats` to offload before `deadline`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    nats: f64,
    deadline: f64,
}

impl TaskSpec {
    pub fn new(nats: f64, deadline: f64) -> Result<Self> {
        Ok(Self {
            nats: positive("nats", nats)?,
            deadline: positive("deadline", deadline)?,
        })
    }

    pub fn nats(&self) -> f64 {
        self.nats
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }
}

/// Channel power gain `|h|^2` of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserChannel {
    gain_sq: f64,
}

impl UserChannel {
    pub fn new(gain_sq: f64) -> Result<Self> {
        Ok(Self {
            gain_sq: positive("gain_sq", gain_sq)?,
        })
    }

    pub fn gain_sq(&self) -> f64 {
        self.gain_sq
    }
}

/// A validated two-user offloading instance with `0 < D_m <= D_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadScenario {
    nats: f64,
    d_m: f64,
    d_n: f64,
    h_m_sq: f64,
    h_n_sq: f64,
}

impl OffloadScenario {
    /// Validates raw parameters. Every value must be positive and finite and
    /// the users must be ordered by deadline.
    pub fn new(nats: f64, d_m: f64, d_n: f64, h_m_sq: f64, h_n_sq: f64) -> Result<Self> {
        let nats = positive("n", nats)?;
        let d_m = positive("dm", d_m)?;
        let d_n = positive("dn", d_n)?;
        let h_m_sq = positive("hm2", h_m_sq)?;
        let h_n_sq = positive("hn2", h_n_sq)?;
        if d_n < d_m {
            return Err(Error::DeadlineOrderViolation { d_m, d_n });
        }
        Ok(Self {
            nats,
            d_m,
            d_n,
            h_m_sq,
            h_n_sq,
        })
    }

    /// Builds a scenario from per-user task and channel descriptions. Both
    /// tasks must carry the same number of nats.
    pub fn from_users(
        task_m: TaskSpec,
        channel_m: UserChannel,
        task_n: TaskSpec,
        channel_n: UserChannel,
    ) -> Result<Self> {
        if task_m.nats != task_n.nats {
            return Err(Error::UnequalTaskSizes {
                n_m: task_m.nats,
                n_n: task_n.nats,
            });
        }
        Self::new(
            task_m.nats,
            task_m.deadline,
            task_n.deadline,
            channel_m.gain_sq,
            channel_n.gain_sq,
        )
    }

    pub fn nats(&self) -> f64 {
        self.nats
    }

    pub fn d_m(&self) -> f64 {
        self.d_m
    }

    pub fn d_n(&self) -> f64 {
        self.d_n
    }

    pub fn h_m_sq(&self) -> f64 {
        self.h_m_sq
    }

    pub fn h_n_sq(&self) -> f64 {
        self.h_n_sq
    }

    /// Length of the interference-free slot `D_n - D_m` left to user `n`.
    pub fn own_slot(&self) -> f64 {
        self.d_n - self.d_m
    }

    /// Same scenario with a different deadline for user `n`.
    pub fn with_d_n(&self, d_n: f64) -> Result<Self> {
        Self::new(self.nats, self.d_m, d_n, self.h_m_sq, self.h_n_sq)
    }

    /// Same scenario with a different channel gain for user `n`.
    pub fn with_h_n_sq(&self, h_n_sq: f64) -> Result<Self> {
        Self::new(self.nats, self.d_m, self.d_n, self.h_m_sq, h_n_sq)
    }
}

/// Validates raw scenario fields. Alias of [`OffloadScenario::new`].
pub fn validate_scenario(
    nats: f64,
    d_m: f64,
    d_n: f64,
    h_m_sq: f64,
    h_n_sq: f64,
) -> Result<OffloadScenario> {
    OffloadScenario::new(nats, d_m, d_n, h_m_sq, h_n_sq)
}

/// User `n`'s allocation: power `p_n1` while sharing `D_m`, power `p_n2`
/// during the extension of length `t_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSchedule {
    pub p_n1: f64,
    pub p_n2: f64,
    pub t_n: f64,
}

impl PowerSchedule {
    /// Checks that every component is non-negative and finite. The deadline
    /// bound `t_n <= D_n - D_m` depends on the scenario and is checked by
    /// [`PowerSchedule::meets_deadline`].
    pub fn new(p_n1: f64, p_n2: f64, t_n: f64) -> Result<Self> {
        for (name, value) in [("p_n1", p_n1), ("p_n2", p_n2), ("t_n", t_n)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidSchedule { name, value });
            }
        }
        Ok(Self { p_n1, p_n2, t_n })
    }

    pub fn meets_deadline(&self, s: &OffloadScenario) -> bool {
        self.t_n <= s.own_slot()
    }
}

/// The three offloading strategies, one per KKT multiplier case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Both log-rate multipliers vanish: power in both phases.
    HybridNoma,
    /// Only the second-phase multiplier is active: everything during `D_m`.
    PureNoma,
    /// Only the first-phase multiplier is active: everything during `T_n`.
    Oma,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [Self::HybridNoma, Self::PureNoma, Self::Oma];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HybridNoma => "hybrid-noma",
            Self::PureNoma => "pure-noma",
            Self::Oma => "oma",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Energy of one strategy for one scenario.
///
/// `energy` is `+inf` either when the strategy is infeasible or when the
/// value overflows; `log_energy` stays finite in the second case and is the
/// quantity used for comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub strategy: StrategyKind,
    pub energy: f64,
    pub log_energy: f64,
    /// Set when the energy only exists in the log domain.
    pub overflow: bool,
    pub phase1_energy: f64,
    pub phase2_energy: f64,
    /// `|h_n|^2 * energy`.
    pub normalized_energy: f64,
    pub feasible: bool,
    /// Allocation behind the energy; `None` when infeasible.
    pub schedule: Option<PowerSchedule>,
}

/// Objective `D_m P_{n,1} + T_n P_{n,2}`, regardless of rate feasibility.
pub fn schedule_energy(s: &OffloadScenario, p: &PowerSchedule) -> f64 {
    s.d_m * p.p_n1 + p.t_n * p.p_n2
}

/// Nats user `n` delivers under schedule `p`, with user `m` decoded last at
/// its OMA power. The schedule is rate-feasible iff this reaches `s.nats()`.
pub fn offloaded_nats(s: &OffloadScenario, p: &PowerSchedule) -> f64 {
    let shared = (-s.nats / s.d_m).exp() * s.h_n_sq * p.p_n1;
    let own = s.h_n_sq * p.p_n2;
    let phase2 = if p.t_n == 0.0 {
        0.0
    } else {
        p.t_n * own.ln_1p()
    };
    s.d_m * shared.ln_1p() + phase2
}

pub fn is_rate_feasible(s: &OffloadScenario, p: &PowerSchedule) -> bool {
    offloaded_nats(s, p) >= s.nats
}
