use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: d1 = {d1} features in N = {n} dimensions")]
    InvalidDimension { n: usize, d1: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} lies outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("non-finite activation at step {step}")]
    Overflow { step: u64 },

    #[error("weight vector has zero norm at step {step}")]
    DegenerateWeight { step: u64 },

    #[error("integration produced a non-finite state at t = {t}")]
    IntegrationFailure { t: f64 },

    #[error("time step violates the stability bound: CFL number {cfl:.4} > 0.9")]
    UnstableStep { cfl: f64 },

    #[error("degenerate activation: {0}")]
    DegenerateActivation(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::DegenerateWeight { .. }
                | Error::IntegrationFailure { .. }
                | Error::UnstableStep { .. }
                | Error::DegenerateActivation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
