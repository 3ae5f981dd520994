//! Monte Carlo estimation of the Kac-Rice integral.

mod accumulator;
mod integrand;
mod run;

use thiserror::Error;

pub use accumulator::Accumulator;
pub use integrand::{param_distributions, IntegrandSpec, Sample, SCALE_DISPARITY_LIMIT, SINGULAR_EPS};
pub use run::{run_integration, Estimate, RunOptions, Status, StoppingRule, Warning};

use crate::sampling::SamplingError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("non-finite integrand value {0}")]
    NonFiniteSample(f64),
    #[error("need at least two samples for an error estimate, have {0}")]
    InsufficientSamples(u64),
    #[error("invalid stopping rule: {0}")]
    InvalidRule(String),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}
