//! Energy-optimal power and time allocation for two-user NOMA-assisted
//! mobile-edge-computing offloading.
//!
//! User `m` (tighter deadline `D_m`) offloads during `[0, D_m]` exactly as it
//! would under OMA. User `n` (deadline `D_n >= D_m`) may share that slot under
//! NOMA with power `P_{n,1}` and then continue alone for `T_n <= D_n - D_m`
//! with power `P_{n,2}`. The crate provides:
//!
//! * [`model`]: scenario types and direct evaluation of the energy objective
//!   and the rate constraint for any candidate schedule.
//! * [`closed_form`]: the closed-form optimal powers, log-domain KKT point,
//!   optimal `T_n` and the derivative of the normalized energy.
//! * [`strategy`]: regime detection and the hybrid-NOMA / pure-NOMA / OMA
//!   comparison.
//! * [`oracle`]: an independent 1-D numerical solver used to certify the
//!   closed forms, plus the energy surface over `(P_{n,1}, P_{n,2})`.
//! * [`experiments`]: deadline sweeps, surface export and the seeded
//!   verification campaign, with CSV emission.
//! * [`cli`]: the `noma-mec` command-line front end.
//!
//! ```
//! use noma_mec::model::OffloadScenario;
//! use noma_mec::strategy::select_strategy;
//! use noma_mec::model::StrategyKind;
//!
//! let s = OffloadScenario::new(15.0, 20.0, 25.0, 1.0, 1.0).unwrap();
//! let table = select_strategy(&s);
//! assert_eq!(table.selected, StrategyKind::HybridNoma);
//! assert!((table.hybrid.energy - 35.66292).abs() < 1e-4);
//! ```

pub mod cli;
pub mod closed_form;
mod error;
pub mod experiments;
pub mod model;
mod numeric;
pub mod oracle;
pub mod strategy;

pub use error::{Error, Result};
