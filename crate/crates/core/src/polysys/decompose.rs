//! Splitting each equation as `f_i = h_i·κ_i + q_i` for a chosen linear
//! parameter `κ_i`, the induced map `g_i = -q_i/h_i`, and the symbolic
//! Jacobian determinant of `g` with respect to the variables.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::error::DecomposeError;
use super::poly::{Polynomial, RationalFunction, VarSpace};
use super::system::ParametrizedSystem;

#[derive(Clone, Debug)]
pub struct LinearDecomposition {
    pub space: VarSpace,
    /// Parameter index solved for in each equation.
    pub linear: Vec<usize>,
    /// Remaining parameter indices, ascending.
    pub rest: Vec<usize>,
    pub h: Vec<Polynomial>,
    pub q: Vec<Polynomial>,
    pub g: Vec<RationalFunction>,
    pub jac_det: RationalFunction,
}

impl LinearDecomposition {
    pub fn n(&self) -> usize {
        self.h.len()
    }
}

/// Decompose with the user's `linear:` choice if present, else the first
/// admissible assignment found by [`choose_linear_params`].
pub fn decompose(sys: &ParametrizedSystem) -> Result<LinearDecomposition, DecomposeError> {
    let linear = match &sys.linear {
        Some(l) => l.clone(),
        None => choose_linear_params(sys)?,
    };
    decompose_linear(sys, &linear)
}

/// Equation `i` is split along parameter `linear_params[i]`.
pub fn decompose_linear(
    sys: &ParametrizedSystem,
    linear_params: &[usize],
) -> Result<LinearDecomposition, DecomposeError> {
    let space = &sys.space;
    let n = space.n();
    let m = space.m();
    if linear_params.len() != n {
        return Err(DecomposeError::NoLinearChoice(format!(
            "need {n} linear parameters, got {}",
            linear_params.len()
        )));
    }
    for (a, &j) in linear_params.iter().enumerate() {
        if j >= m {
            return Err(DecomposeError::BadParamIndex(j));
        }
        if linear_params[..a].contains(&j) {
            return Err(DecomposeError::DuplicateParam(space.k_names()[j].clone()));
        }
    }

    let mut h = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for (i, f) in sys.equations.iter().enumerate() {
        let own = linear_params[i];
        for (other_eq, &j) in linear_params.iter().enumerate() {
            if other_eq != i && f.mentions(space.param_slot(j)) {
                return Err(DecomposeError::CrossLinearParam {
                    equation: i + 1,
                    param: space.k_names()[j].clone(),
                });
            }
        }
        let slot = space.param_slot(own);
        if f.degree_in(slot) != 1 {
            return Err(DecomposeError::NotLinearInChosenParam {
                equation: i + 1,
                param: space.k_names()[own].clone(),
            });
        }
        h.push(f.coefficient_of(slot, 1));
        q.push(f.coefficient_of(slot, 0));
    }

    let g: Vec<RationalFunction> = h
        .iter()
        .zip(&q)
        .map(|(hi, qi)| RationalFunction {
            num: -qi,
            den: hi.clone(),
        })
        .collect();
    let rest = (0..m).filter(|j| !linear_params.contains(j)).collect();
    let jac_det = jacobian_det_of(&h, &q, n);

    Ok(LinearDecomposition {
        space: space.clone(),
        linear: linear_params.to_vec(),
        rest,
        h,
        q,
        g,
        jac_det,
    })
}

/// First admissible assignment of linear parameters in index order:
/// equation `i` gets a parameter of degree one in it that appears in no
/// other equation.
pub fn choose_linear_params(sys: &ParametrizedSystem) -> Result<Vec<usize>, DecomposeError> {
    let n = sys.n();
    let m = sys.m();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..m)
                .filter(|&j| {
                    let slot = sys.space.param_slot(j);
                    sys.equations[i].degree_in(slot) == 1
                        && (0..n).all(|e| e == i || !sys.equations[e].mentions(slot))
                })
                .collect()
        })
        .collect();
    let mut chosen = Vec::with_capacity(n);
    if assign(&candidates, &mut chosen) {
        Ok(chosen)
    } else {
        let bad = candidates.iter().position(Vec::is_empty);
        Err(DecomposeError::NoLinearChoice(match bad {
            Some(i) => format!(
                "equation {} has no parameter of degree one absent from the other equations",
                i + 1
            ),
            None => "candidate parameters overlap".into(),
        }))
    }
}

fn assign(candidates: &[Vec<usize>], chosen: &mut Vec<usize>) -> bool {
    let i = chosen.len();
    if i == candidates.len() {
        return true;
    }
    for &j in &candidates[i] {
        if !chosen.contains(&j) {
            chosen.push(j);
            if assign(candidates, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Symbolic `det(∂g_i/∂t_j)` for `g_i = -q_i/h_i`.
///
/// Row `i` of the Jacobian is `N_i / h_i^2` with
/// `N_ij = q_i ∂_j h_i - h_i ∂_j q_i`, so the determinant is
/// `det(N) / ∏ h_i^2`. Factors `h_i` are divided out of `det(N)` where the
/// division is exact, and the result is checked against the unreduced form
/// at random points before being accepted.
pub fn jacobian_det(dec: &LinearDecomposition) -> RationalFunction {
    jacobian_det_of(&dec.h, &dec.q, dec.n())
}

fn jacobian_det_of(h: &[Polynomial], q: &[Polynomial], n: usize) -> RationalFunction {
    let dim = h[0].dim();
    let rows: Vec<Vec<Polynomial>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = &q[i] * &h[i].partial_derivative(j);
                    let b = &h[i] * &q[i].partial_derivative(j);
                    &a - &b
                })
                .collect()
        })
        .collect();
    let num = laplace_det(&rows);
    let den_full = h.iter().fold(Polynomial::constant(dim, 1.0), |acc, hi| {
        &(&acc * hi) * hi
    });
    let unreduced = RationalFunction {
        num: num.clone(),
        den: den_full,
    };

    let mut red_num = num;
    let mut den = Polynomial::constant(dim, 1.0);
    for hi in h {
        let content = hi.monomial_content();
        let rest = hi.div_monomial(&content);
        let mono = Polynomial::from_terms(dim, [(content.exponents().to_vec(), 1.0)]);
        let mono_sq = &mono * &mono;
        if rest.as_constant().is_some() {
            den = &(&(&den * &mono_sq) * &rest) * &rest;
            continue;
        }
        let mut remaining = 2;
        while remaining > 0 && !red_num.is_zero() {
            match red_num.exact_div(&rest, 1e-11) {
                Some(quot) => {
                    red_num = quot;
                    remaining -= 1;
                }
                None => break,
            }
        }
        den = &den * &mono_sq;
        for _ in 0..remaining {
            den = &den * &rest;
        }
    }
    let reduced = RationalFunction {
        num: red_num,
        den,
    }
    .cancel_monomial_content();

    if agrees(&reduced, &unreduced, dim) {
        normalize_sign(reduced)
    } else {
        unreduced.cancel_monomial_content()
    }
}

/// Make the denominator's leading coefficient positive and one when it is
/// a single term, so printed forms are canonical.
fn normalize_sign(r: RationalFunction) -> RationalFunction {
    let Some((_, lead)) = r.den.leading_term() else {
        return r;
    };
    let s = if r.den.num_terms() == 1 { 1.0 / lead } else if lead < 0.0 { -1.0 } else { 1.0 };
    if s == 1.0 {
        return r;
    }
    RationalFunction {
        num: r.num.scale(s),
        den: r.den.scale(s),
    }
}

fn agrees(a: &RationalFunction, b: &RationalFunction, dim: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1acb_0000_0001);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 12 && attempts < 200 {
        attempts += 1;
        let pt: Vec<f64> = (0..dim)
            .map(|_| 0.25 + 1.5 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
            .collect();
        let (an, ad) = (a.num.eval_unchecked(&pt), a.den.eval_unchecked(&pt));
        let (bn, bd) = (b.num.eval_unchecked(&pt), b.den.eval_unchecked(&pt));
        if ad == 0.0 || bd == 0.0 {
            continue;
        }
        let (va, vb) = (an / ad, bn / bd);
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        let term_scale = b.num.terms().map(|(m, c)| (c * m.evaluate(&pt)).abs()).sum::<f64>()
            / bd.abs();
        if (va - vb).abs() > 1e-8 * vb.abs().max(term_scale) {
            return false;
        }
        checked += 1;
    }
    checked > 0
}

/// Determinant by Laplace expansion along rows, memoized on column subsets.
fn laplace_det(rows: &[Vec<Polynomial>]) -> Polynomial {
    let dim = rows[0][0].dim();
    let mut memo: HashMap<u32, Polynomial> = HashMap::new();
    fn minor(
        rows: &[Vec<Polynomial>],
        row: usize,
        mask: u32,
        dim: usize,
        memo: &mut HashMap<u32, Polynomial>,
    ) -> Polynomial {
        let n = rows.len();
        if row == n {
            return Polynomial::constant(dim, 1.0);
        }
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        let mut acc = Polynomial::zero(dim);
        let mut sign = 1.0;
        for col in 0..n {
            if mask & (1 << col) != 0 {
                continue;
            }
            let entry = &rows[row][col];
            if !entry.is_zero() {
                let sub = minor(rows, row + 1, mask | (1 << col), dim, memo);
                if !sub.is_zero() {
                    let prod = (entry * &sub).scale(sign);
                    acc = &acc + &prod;
                }
            }
            sign = -sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    minor(rows, 0, 0, dim, &mut memo)
}
