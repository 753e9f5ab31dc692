//! Discrete-choice and count-data maximum likelihood on panel data.
//!
//! A [`Frame`] holds named numeric columns. [`build_design`] turns a
//! [`RegressionSpec`] into a dense design (regressors, fixed-effect dummies
//! with one reference level dropped, then an intercept), and
//! [`fit_probit`] / [`fit_poisson`] maximise the likelihood by Newton steps
//! with step-halving. Standard errors come from the firm-clustered sandwich
//! in [`clustered_vcov`].

use alloc::string::String;
use core::fmt;

mod design;
mod fit;
mod frame;
pub mod linalg;
mod vcov;

pub use design::{build_design, Design, Family, RegressionSpec};
pub use fit::{
    fit, fit_poisson, fit_probit, ln_norm_cdf, mills_ratio, norm_cdf, FitOptions, LL_RESOLUTION, FitResult, IterationRecord,
};
pub use frame::Frame;
pub use linalg::Matrix;
pub use vcov::{clustered_vcov, ClusterCorrection};

#[derive(Debug, Clone, PartialEq)]
pub enum EstimationError {
    MissingColumn(String),
    DuplicateColumn(String),
    LengthMismatch { column: String, expected: usize, found: usize },
    DependentInRegressors(String),
    /// A regressor takes one value on every row.
    ConstantColumn(String),
    /// A column is a linear combination of the intercept, the fixed effects
    /// or earlier regressors.
    Collinear(String),
    /// A fixed-effect or cluster column holds non-integer values.
    NotCategorical(String),
    InvalidResponse { row: usize, value: f64 },
    NonFinite { column: String, row: usize },
    /// Probit: the column alone splits zeros from ones.
    Separation(String),
    /// Poisson: the likelihood has no maximum along the named column.
    Unbounded(String),
    /// Hessian or information matrix not positive definite.
    RankDeficient,
    NoRows,
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationError::MissingColumn(c) => write!(f, "missing column `{c}`"),
            EstimationError::DuplicateColumn(c) => write!(f, "duplicate column `{c}`"),
            EstimationError::LengthMismatch { column, expected, found } => {
                write!(f, "column `{column}` has {found} rows, expected {expected}")
            }
            EstimationError::DependentInRegressors(c) => write!(f, "dependent variable `{c}` is also a regressor"),
            EstimationError::ConstantColumn(c) => {
                write!(f, "regressor `{c}` is constant and collinear with the intercept")
            }
            EstimationError::Collinear(c) => write!(
                f,
                "regressor `{c}` is perfectly collinear with the intercept, fixed effects or earlier regressors; \
                 pass it in the drop list to estimate without it"
            ),
            EstimationError::NotCategorical(c) => write!(f, "column `{c}` must hold integer category codes"),
            EstimationError::InvalidResponse { row, value } => write!(f, "invalid response {value} at row {row}"),
            EstimationError::NonFinite { column, row } => write!(f, "non-finite value in `{column}` at row {row}"),
            EstimationError::Separation(c) => write!(f, "column `{c}` perfectly separates the response"),
            EstimationError::Unbounded(c) => write!(f, "likelihood is unbounded along column `{c}`"),
            EstimationError::RankDeficient => f.write_str("information matrix is not positive definite"),
            EstimationError::NoRows => f.write_str("no observations"),
        }
    }
}

impl core::error::Error for EstimationError {}
