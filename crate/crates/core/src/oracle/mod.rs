//! Independent reference estimator: sample parameters, count roots of a
//! univariate reduction with Sturm sequences, and average.

mod direct;
mod reduce;
mod sturm;

use thiserror::Error;

use crate::mc::McError;
use crate::sampling::SamplingError;

pub use direct::{direct_expectation, DirectEstimate, DirectOptions, MAX_REJECTION_RATE};
pub use reduce::{reduce_to_univariate, ClearedFactor, Substitution, UnivariateReduction};
pub use sturm::{sturm_count_positive, SturmChain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("polynomial has a root at zero")]
    DegenerateAtZero,
    #[error("polynomial has a root at the interval end {0}")]
    DegenerateAtBoundary(f64),
    #[error("polynomial has a repeated root")]
    NotSquarefree,
    #[error("leading coefficient vanishes")]
    VanishingLeading,
    #[error("system cannot be reduced to one variable: {0}")]
    NotReducible(String),
    #[error("{0} consecutive parameter samples were rejected")]
    TooManyRejections(u64),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Mc(#[from] McError),
}
