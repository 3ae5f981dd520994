//! Reaction networks under mass-action kinetics.

mod linalg;
mod network;
mod reduce;

use thiserror::Error;

use crate::polysys::{DecomposeError, Polynomial, SystemError};

pub use linalg::QMatrix;
pub use network::{parse_network, Reaction, ReactionNetwork};
pub use reduce::{conservation_basis, reduced_system, reduced_system_with, ReducedSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrnError {
    #[error("line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: rate label `{label}` used twice")]
    DuplicateRate { line: usize, label: String },
    #[error("line {line}: reaction has no net change")]
    NoNetChange { line: usize },
    #[error("network has no species")]
    Empty,
    #[error("name collision: {0}")]
    NameCollision(String),
    #[error("no set of columns makes the selected rows invertible")]
    NoFullRankColumnSet,
    #[error("invalid selection: {0}")]
    BadSelection(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

impl CrnError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CrnError::Malformed { line, .. }
            | CrnError::DuplicateRate { line, .. }
            | CrnError::NoNetChange { line } => Some(*line),
            _ => None,
        }
    }
}

/// `N[i][j] = b_ij - a_ij`, species by reactions.
pub fn stoichiometric_matrix(net: &ReactionNetwork) -> Vec<Vec<i64>> {
    (0..net.num_species())
        .map(|i| {
            net.reactions
                .iter()
                .map(|r| r.product[i] as i64 - r.reactant[i] as i64)
                .collect()
        })
        .collect()
}

/// `x^{a_j}` times `k_j` as an exponent vector over `dim` slots, with the
/// rate constant at slot `k_slot`.
fn reaction_monomial(r: &Reaction, dim: usize, k_slot: usize) -> Vec<u32> {
    let mut e = vec![0u32; dim];
    e[..r.reactant.len()].copy_from_slice(&r.reactant);
    e[k_slot] = 1;
    e
}

/// Mass-action right-hand side, one polynomial per species, over
/// [`ReactionNetwork::var_space`].
pub fn mass_action_rhs(net: &ReactionNetwork) -> Result<Vec<Polynomial>, CrnError> {
    let space = net.var_space()?;
    let n_mat = stoichiometric_matrix(net);
    let dim = space.dim();
    Ok(n_mat
        .iter()
        .map(|row| {
            Polynomial::from_terms(
                dim,
                row.iter().zip(&net.reactions).enumerate().filter(|(_, (&c, _))| c != 0).map(
                    |(j, (&c, r))| (reaction_monomial(r, dim, space.param_slot(j)), c as f64),
                ),
            )
        })
        .collect())
}
