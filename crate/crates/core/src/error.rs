use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("deadline order violated: D_n = {d_n} is earlier than D_m = {d_m}")]
    DeadlineOrderViolation { d_m: f64, d_n: f64 },

    #[error("both users must share one task size, got {n_m} and {n_n} nats")]
    UnequalTaskSizes { n_m: f64, n_n: f64 },

    #[error("schedule component `{name}` must be non-negative and finite, got {value}")]
    InvalidSchedule { name: &'static str, value: f64 },

    #[error("time extension T_n = {t_n} outside [{min}, {max}]")]
    TimeExtensionOutOfRange { t_n: f64, min: f64, max: f64 },

    #[error("hybrid regime requires D_n < 2 D_m, got D_m = {d_m}, D_n = {d_n}")]
    RegimeViolation { d_m: f64, d_n: f64 },

    #[error("search did not reach width {tol} within {iterations} iterations")]
    NonConvergence { iterations: usize, tol: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
}
