//! Sparse multivariate polynomials and rational functions with `f64`
//! coefficients over a fixed [`VarSpace`].
//!
//! Every polynomial lives in the full `n + m` dimensional space: the first
//! `n` slots are the variables `t`, the remaining `m` the parameters `κ`.
//! Terms are kept in graded lexicographic order and zero coefficients are
//! never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::error::PolyError;

/// Names of the variables and parameters a polynomial is written in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSpace {
    t_names: Vec<String>,
    k_names: Vec<String>,
}

impl VarSpace {
    pub fn new<S: Into<String>>(
        t_names: impl IntoIterator<Item = S>,
        k_names: impl IntoIterator<Item = S>,
    ) -> Result<Self, PolyError> {
        let t_names: Vec<String> = t_names.into_iter().map(Into::into).collect();
        let k_names: Vec<String> = k_names.into_iter().map(Into::into).collect();
        if t_names.is_empty() {
            return Err(PolyError::NoVariables);
        }
        let mut seen = std::collections::HashSet::new();
        for name in t_names.iter().chain(k_names.iter()) {
            if !is_identifier(name) {
                return Err(PolyError::InvalidIdentifier(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(PolyError::DuplicateIdentifier(name.clone()));
            }
        }
        Ok(Self { t_names, k_names })
    }

    /// Number of variables `n`.
    pub fn n(&self) -> usize {
        self.t_names.len()
    }

    /// Number of parameters `m`.
    pub fn m(&self) -> usize {
        self.k_names.len()
    }

    /// Length of exponent vectors and evaluation points, `n + m`.
    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    pub fn t_names(&self) -> &[String] {
        &self.t_names
    }

    pub fn k_names(&self) -> &[String] {
        &self.k_names
    }

    /// Slot of an identifier in the `n + m` layout.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.t_names
            .iter()
            .chain(self.k_names.iter())
            .position(|s| s == name)
    }

    /// Slot of parameter `j` (0-based among parameters).
    pub fn param_slot(&self, j: usize) -> usize {
        self.n() + j
    }

    pub fn is_variable_slot(&self, slot: usize) -> bool {
        slot < self.n()
    }

    pub fn name(&self, slot: usize) -> &str {
        if slot < self.n() {
            &self.t_names[slot]
        } else {
            &self.k_names[slot - self.n()]
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Exponent vector ordered by total degree, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Box<[u32]>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim].into_boxed_slice())
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps.into_boxed_slice())
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| *a.min(b)).collect())
    }

    fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `dim` indeterminates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The indeterminate in `slot`.
    pub fn var(dim: usize, slot: usize) -> Self {
        let mut exps = vec![0; dim];
        exps[slot] = 1;
        Self::monomial(exps, 1.0)
    }

    pub fn monomial(exps: Vec<u32>, coef: f64) -> Self {
        let dim = exps.len();
        let mut p = Self::zero(dim);
        p.add_term(Monomial::from_exponents(exps), coef);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            assert_eq!(exps.len(), dim, "exponent vector length mismatch");
            p.add_term(Monomial::from_exponents(exps), c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn add_term(&mut self, mono: Monomial, coef: f64) {
        debug_assert_eq!(mono.dim(), self.dim);
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = *e.get() + coef;
                if v == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest power of the indeterminate in `slot`.
    pub fn degree_in(&self, slot: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| m.0[slot])
            .max()
            .unwrap_or(0)
    }

    pub fn mentions(&self, slot: usize) -> bool {
        self.degree_in(slot) > 0
    }

    /// Constant value, if the polynomial has no non-constant term.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then_some(*c)
            }
            _ => None,
        }
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn min_abs_coef(&self) -> f64 {
        self.terms.values().fold(f64::INFINITY, |a, c| a.min(c.abs()))
    }

    /// Leading term in graded-lex order.
    pub fn leading_term(&self) -> Option<(&Monomial, f64)> {
        self.terms.iter().next_back().map(|(m, c)| (m, *c))
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(point)).sum()
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.dim, 1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn partial_derivative(&self, slot: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.0[slot];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.to_vec();
            exps[slot] -= 1;
            out.add_term(Monomial::from_exponents(exps), c * e as f64);
        }
        out
    }

    /// Coefficient of `x_slot^power`, as a polynomial free of `x_slot`.
    pub fn coefficient_of(&self, slot: usize, power: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in &self.terms {
            if m.0[slot] == power {
                let mut exps = m.0.to_vec();
                exps[slot] = 0;
                out.add_term(Monomial::from_exponents(exps), *c);
            }
        }
        out
    }

    /// Replace the indeterminate in `slot` by a fixed value.
    pub fn specialize(&self, slot: usize, value: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.0[slot];
            let mut exps = m.0.to_vec();
            exps[slot] = 0;
            out.add_term(Monomial::from_exponents(exps), c * value.powi(e as i32));
        }
        out
    }

    /// Replace the indeterminate in `slot` by `r = num/den` and clear the
    /// denominator `den^d`, where `d` is the degree of `self` in `slot`.
    pub fn substitute(&self, slot: usize, r: &RationalFunction) -> RationalFunction {
        let d = self.degree_in(slot);
        if d == 0 {
            return RationalFunction::from(self.clone());
        }
        let num_pows: Vec<Polynomial> = powers(&r.num, d);
        let den_pows: Vec<Polynomial> = powers(&r.den, d);
        let mut out = Polynomial::zero(self.dim);
        for e in 0..=d {
            let coef = self.coefficient_of(slot, e);
            if coef.is_zero() {
                continue;
            }
            let piece = &(&coef * &num_pows[e as usize]) * &den_pows[(d - e) as usize];
            out = &out + &piece;
        }
        RationalFunction {
            num: out,
            den: den_pows[d as usize].clone(),
        }
    }

    /// Greatest common monomial divisor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        match it.next() {
            None => Monomial::one(self.dim),
            Some(first) => it.fold(first.clone(), |g, m| g.gcd(m)),
        }
    }

    pub fn div_monomial(&self, mono: &Monomial) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    debug_assert!(mono.divides(m));
                    (m.div(mono), *c)
                })
                .collect(),
        }
    }

    /// Exact division by `divisor`, accepting a remainder whose
    /// coefficients are below `rel_tol` times the largest coefficient
    /// met during the division. Returns `None` if `divisor` does not divide.
    pub fn exact_div(&self, divisor: &Polynomial, rel_tol: f64) -> Option<Polynomial> {
        let (lead_m, lead_c) = divisor.leading_term()?;
        let lead_m = lead_m.clone();
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(self.dim);
        let scale = self.max_abs_coef().max(f64::MIN_POSITIVE);
        let tol = rel_tol * scale;
        while let Some((m, c)) = rem.leading_term() {
            if c.abs() <= tol {
                let m = m.clone();
                rem.terms.remove(&m);
                continue;
            }
            if !lead_m.divides(m) {
                return None;
            }
            let qm = m.div(&lead_m);
            let qc = c / lead_c;
            quot.add_term(qm.clone(), qc);
            for (dm, dc) in divisor.terms.iter() {
                let prod = dm.mul(&qm);
                rem.add_term(prod.clone(), -qc * dc);
                if let Some(v) = rem.terms.get(&prod) {
                    if v.abs() <= tol * 1e-3 {
                        rem.terms.remove(&prod);
                    }
                }
            }
        }
        Some(quot)
    }

    /// Drop terms whose magnitude is at most `rel_tol` times the largest.
    pub fn chop(&self, rel_tol: f64) -> Polynomial {
        let tol = rel_tol * self.max_abs_coef();
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// Printable form using the names of `space`.
    pub fn display<'a>(&'a self, space: &'a VarSpace) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, space }
    }
}

fn powers(p: &Polynomial, d: u32) -> Vec<Polynomial> {
    let mut out = Vec::with_capacity(d as usize + 1);
    out.push(Polynomial::constant(p.dim, 1.0));
    for i in 1..=d as usize {
        let next = &out[i - 1] * p;
        out.push(next);
    }
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -*c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = Polynomial::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    space: &'a VarSpace,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.poly.terms.iter().rev().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            if mag != 1.0 || m.is_one() {
                factors.push(format_coef(mag));
            }
            for (slot, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.space.name(slot).to_string()),
                    _ => factors.push(format!("{}^{}", self.space.name(slot), e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn format_coef(c: f64) -> String {
    let s = format!("{c:?}");
    // `{:?}` yields forms like `1e-7` and `2.5e20`, which the parser accepts.
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Quotient of two polynomials. Never reduced to lowest terms implicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        assert_eq!(num.dim(), den.dim(), "dimension mismatch");
        Ok(Self { num, den })
    }

    pub fn dim(&self) -> usize {
        self.num.dim()
    }

    /// `(num, den)` evaluated at `point`.
    pub fn evaluate_parts(&self, point: &[f64]) -> Result<(f64, f64), PolyError> {
        Ok((self.num.evaluate(point)?, self.den.evaluate(point)?))
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        let (n, d) = self.evaluate_parts(point)?;
        Ok(n / d)
    }

    pub fn partial_derivative(&self, slot: usize) -> RationalFunction {
        let dn = self.num.partial_derivative(slot);
        let dd = self.den.partial_derivative(slot);
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        RationalFunction {
            num,
            den: &self.den * &self.den,
        }
    }

    /// Divide numerator and denominator by their common monomial factor.
    pub fn cancel_monomial_content(&self) -> RationalFunction {
        if self.num.is_zero() {
            return RationalFunction {
                num: self.num.clone(),
                den: Polynomial::constant(self.dim(), 1.0),
            };
        }
        let g = self.num.monomial_content().gcd(&self.den.monomial_content());
        if g.is_one() {
            return self.clone();
        }
        RationalFunction {
            num: self.num.div_monomial(&g),
            den: self.den.div_monomial(&g),
        }
    }

    pub fn display<'a>(&'a self, space: &'a VarSpace) -> RationalDisplay<'a> {
        RationalDisplay { r: self, space }
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        let dim = p.dim();
        RationalFunction {
            num: p,
            den: Polynomial::constant(dim, 1.0),
        }
    }
}

pub struct RationalDisplay<'a> {
    r: &'a RationalFunction,
    space: &'a VarSpace,
}

impl fmt::Display for RationalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.r.den.as_constant() == Some(1.0) {
            write!(f, "{}", self.r.num.display(self.space))
        } else {
            write!(
                f,
                "({}) / ({})",
                self.r.num.display(self.space),
                self.r.den.display(self.space)
            )
        }
    }
}
