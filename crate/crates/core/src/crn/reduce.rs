use num_traits::Zero;

use super::linalg::{self, QMatrix};
use super::{reaction_monomial, stoichiometric_matrix, CrnError, ReactionNetwork};
use crate::polysys::{decompose_linear, ParametrizedSystem, Polynomial, VarSpace};

/// Basis of the left kernel of `N` (species by reactions), one row per
/// conservation law.
pub fn conservation_basis(n_mat: &[Vec<i64>]) -> QMatrix {
    let species = n_mat.len();
    let reactions = n_mat.first().map_or(0, Vec::len);
    let nt = linalg::transpose(&linalg::from_integers(n_mat), reactions);
    let mut w = linalg::kernel(&nt, species);
    linalg::rref(&mut w);
    for row in w.iter_mut() {
        linalg::normalize_row(row);
    }
    w
}

/// Square steady-state system with conservation laws, written so that
/// each equation is linear in its own parameter with a monomial
/// coefficient.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub sys: ParametrizedSystem,
    /// Parameter indices, one per equation: chosen rate constants, then `T`s.
    pub linear_params: Vec<usize>,
    /// Rows of `N` kept.
    pub rows: Vec<usize>,
    /// Reactions whose rate constants are solved for.
    pub columns: Vec<usize>,
    pub conservation: QMatrix,
}

pub fn reduced_system(net: &ReactionNetwork) -> Result<ReducedSystem, CrnError> {
    reduced_system_with(net, None, None)
}

/// Like [`reduced_system`] with optional explicit row and column choices.
pub fn reduced_system_with(
    net: &ReactionNetwork,
    rows: Option<&[usize]>,
    columns: Option<&[usize]>,
) -> Result<ReducedSystem, CrnError> {
    let n = net.num_species();
    let r = net.reactions.len();
    let n_int = stoichiometric_matrix(net);
    let n_q = linalg::from_integers(&n_int);
    let s = linalg::rank(&n_q);
    let w = conservation_basis(&n_int);
    let d = w.len();
    debug_assert_eq!(s + d, n);

    let rows = match rows {
        Some(rows) => {
            check_indices(rows, n, s, "row")?;
            let sel: QMatrix = rows.iter().map(|&i| n_q[i].clone()).collect();
            if linalg::rank(&sel) != s {
                return Err(CrnError::BadSelection("rows are linearly dependent".into()));
            }
            rows.to_vec()
        }
        None => greedy(n, s, |idx| idx.iter().map(|&i| n_q[i].clone()).collect()),
    };
    let n_tilde: QMatrix = rows.iter().map(|&i| n_q[i].clone()).collect();
    let cols_of = |idx: &[usize]| -> QMatrix {
        n_tilde
            .iter()
            .map(|row| idx.iter().map(|&j| row[j].clone()).collect())
            .collect()
    };
    let columns = match columns {
        Some(c) => {
            check_indices(c, r, s, "column")?;
            c.to_vec()
        }
        None => {
            let c = greedy(r, s, |idx| linalg::transpose(&cols_of(idx), idx.len()));
            if c.len() < s {
                return Err(CrnError::NoFullRankColumnSet);
            }
            c
        }
    };
    let inv = linalg::inverse(&cols_of(&columns)).ok_or(CrnError::NoFullRankColumnSet)?;
    let m_mat = linalg::mul(&inv, &n_tilde);

    let mut k_names: Vec<String> = net.rate_labels().into_iter().map(String::from).collect();
    let t_names = net.concentration_names()?;
    for i in 1..=d {
        let name = format!("T{i}");
        if k_names.contains(&name) || t_names.contains(&name) {
            return Err(CrnError::NameCollision(format!(
                "conservation total `{name}` clashes with an existing name"
            )));
        }
        k_names.push(name);
    }
    let space = VarSpace::new(t_names, k_names).map_err(|e| CrnError::NameCollision(e.to_string()))?;
    let dim = space.dim();

    let mut equations = Vec::with_capacity(n);
    for row in &m_mat {
        equations.push(Polynomial::from_terms(
            dim,
            row.iter()
                .zip(&net.reactions)
                .enumerate()
                .filter(|(_, (c, _))| !c.is_zero())
                .map(|(j, (c, rx))| (reaction_monomial(rx, dim, space.param_slot(j)), linalg::to_f64(c))),
        ));
    }
    for (i, row) in w.iter().enumerate() {
        let mut t_exp = vec![0u32; dim];
        t_exp[space.param_slot(r + i)] = 1;
        let mut terms = vec![(t_exp, 1.0)];
        for (j, c) in row.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            let mut e = vec![0u32; dim];
            e[j] = 1;
            terms.push((e, -linalg::to_f64(c)));
        }
        equations.push(Polynomial::from_terms(dim, terms));
    }

    let linear_params: Vec<usize> = columns.iter().copied().chain(r..r + d).collect();
    let mut sys = ParametrizedSystem::new(space, equations)?;
    sys.linear = Some(linear_params.clone());
    let dec = decompose_linear(&sys, &linear_params)?;
    debug_assert!(dec.h.iter().all(|h| h.num_terms() == 1));
    Ok(ReducedSystem {
        sys,
        linear_params,
        rows,
        columns,
        conservation: w,
    })
}

fn check_indices(idx: &[usize], bound: usize, want: usize, what: &str) -> Result<(), CrnError> {
    if idx.len() != want {
        return Err(CrnError::BadSelection(format!("expected {want} {what} indices, got {}", idx.len())));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= bound) {
        return Err(CrnError::BadSelection(format!("{what} index {bad} out of range")));
    }
    Ok(())
}

/// First-found greedy choice of `want` indices out of `0..count` such that
/// the matrix built by `build` keeps full row rank.
fn greedy(count: usize, want: usize, build: impl Fn(&[usize]) -> QMatrix) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(want);
    for i in 0..count {
        if chosen.len() == want {
            break;
        }
        chosen.push(i);
        if linalg::rank(&build(&chosen)) < chosen.len() {
            chosen.pop();
        }
    }
    chosen
}
