//! Expected number of positive solutions of parametrized polynomial
//! systems, estimated by Monte Carlo integration of the Kac-Rice formula.
//!
//! The pipeline: parse a [`polysys::ParametrizedSystem`] (or derive one
//! from a reaction network with [`crn`]), split it into linear parameters
//! with [`polysys::decompose`], and integrate with [`mc::run_integration`].
//! [`regions`] partitions and searches parameter boxes on top of that, and
//! [`oracle`] gives an independent root-counting estimate for checking.

pub mod crn;
pub mod mc;
pub mod oracle;
pub mod polysys;
pub mod regions;
pub mod sampling;
