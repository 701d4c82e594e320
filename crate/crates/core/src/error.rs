use alloc::string::String;

/// Errors raised by the numerical routines and the decoder.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar argument is outside the domain where the quantity is defined.
    #[error("{what} = {value} is outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// `cauchy_inverse` was asked for a value the transform never attains.
    #[error("value {value} is outside the attainable range ({lo}, {hi})")]
    Unattainable { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Ψ of a custom spectrum needs its α → 0 limit supplied explicitly.
    #[error("custom spectrum has no restricted density ρ₀")]
    MissingRestrictedDensity,

    /// A bisection bracket whose endpoints do not straddle the transition.
    #[error("bracket [{lo}, {hi}] does not straddle the transition (predicate {lo_value} at lo, {hi_value} at hi)")]
    Bracket {
        lo: f64,
        hi: f64,
        lo_value: bool,
        hi_value: bool,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}
