//! Polynomial systems with parameters.

mod compiled;
mod decompose;
mod error;
mod parse;
mod poly;
mod system;

pub use compiled::{CompiledPoly, CompiledRational};
pub use decompose::{choose_linear_params, decompose, decompose_linear, jacobian_det, LinearDecomposition};
pub use error::{DecomposeError, PolyError, SystemError};
pub use parse::parse_polynomial;
pub(crate) use poly::is_identifier;
pub use poly::{Monomial, PolyDisplay, Polynomial, RationalDisplay, RationalFunction, VarSpace};
pub use system::{BoundHint, Interval, ParamDensity, ParametrizedSystem};
