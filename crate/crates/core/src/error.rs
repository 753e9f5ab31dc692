use alloc::string::String;
use core::fmt;

use crate::geo::CountryId;
use crate::search::Channel;

/// Errors raised by the model-side operations.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    UnknownCountry(CountryId),
    /// A parameter or state value outside its admissible domain.
    Domain { what: &'static str, value: f64 },
    InvalidGeometry(String),
    /// The target market is already part of the portfolio being summed over.
    TargetInPortfolio(CountryId),
    NotViable { cost: f64, cutoff: f64 },
    ChannelUnavailable(Channel),
    NoEquilibrium { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    Singular(&'static str),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownCountry(id) => write!(f, "unknown country index {}", id.0),
            ModelError::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            ModelError::InvalidGeometry(msg) => write!(f, "invalid geometry: {msg}"),
            ModelError::TargetInPortfolio(id) => {
                write!(f, "target country {} is part of the market set", id.0)
            }
            ModelError::NotViable { cost, cutoff } => {
                write!(f, "firm not viable: cost {cost} exceeds cutoff {cutoff}")
            }
            ModelError::ChannelUnavailable(ch) => write!(f, "channel {} unavailable", ch.name()),
            ModelError::NoEquilibrium { lo, hi, f_lo, f_hi } => write!(
                f,
                "no equilibrium on [{lo}, {hi}]: residual does not change sign ({f_lo}, {f_hi})"
            ),
            ModelError::Singular(what) => write!(f, "singular {what}"),
        }
    }
}

impl core::error::Error for ModelError {}
