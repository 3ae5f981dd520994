use super::OracleError;
use crate::polysys::{ParametrizedSystem, Polynomial, RationalFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct Substitution {
    /// Variable index eliminated.
    pub var: usize,
    /// Its value in terms of variables eliminated later and parameters.
    pub value: RationalFunction,
}

/// A factor multiplied into the remaining equations while clearing
/// denominators, with its sign on the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ClearedFactor {
    pub factor: Polynomial,
    pub power: u32,
    pub sign: i8,
}

/// A chain of closed-form eliminations ending in one polynomial in a
/// single variable.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateReduction {
    pub target: usize,
    /// Applied in order; evaluate in reverse to back-substitute.
    pub substitutions: Vec<Substitution>,
    pub final_poly: Polynomial,
    pub cleared: Vec<ClearedFactor>,
}

impl UnivariateReduction {
    pub fn is_identity(&self) -> bool {
        self.substitutions.is_empty()
    }
}

/// Sign of `p` on the domain and parameter box, if evidently constant: a
/// nonzero constant, or a polynomial whose coefficients share a sign and
/// whose variables and parameters are all nonnegative.
fn constant_sign(p: &Polynomial, sys: &ParametrizedSystem) -> Option<i8> {
    if let Some(c) = p.as_constant() {
        return (c != 0.0).then_some(if c > 0.0 { 1 } else { -1 });
    }
    let positive = p.terms().all(|(_, c)| c > 0.0);
    let negative = p.terms().all(|(_, c)| c < 0.0);
    if !positive && !negative {
        return None;
    }
    let n = sys.n();
    let nonneg = (0..p.dim()).filter(|&s| p.mentions(s)).all(|s| {
        if s < n {
            sys.domain[s].lo >= 0.0
        } else {
            sys.param_box[s - n].lo >= 0.0
        }
    });
    nonneg.then_some(if positive { 1 } else { -1 })
}

/// Eliminate all but one variable by repeatedly solving an equation of
/// degree one in some variable. Variables are tried from last to first.
pub fn reduce_to_univariate(sys: &ParametrizedSystem) -> Result<UnivariateReduction, OracleError> {
    let n = sys.n();
    let mut eqs: Vec<Polynomial> = sys.equations.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut substitutions = Vec::new();
    let mut cleared = Vec::new();

    while remaining.len() > 1 {
        let mut pick = None;
        'search: for (ei, eq) in eqs.iter().enumerate() {
            for &v in remaining.iter().rev() {
                if eq.degree_in(v) != 1 {
                    continue;
                }
                let a = eq.coefficient_of(v, 1);
                if let Some(sign) = constant_sign(&a, sys) {
                    pick = Some((ei, v, a, sign));
                    break 'search;
                }
            }
        }
        let Some((ei, v, a, sign)) = pick else {
            return Err(OracleError::NotReducible(format!(
                "no equation is linear with a sign-definite coefficient in any of {} remaining variables",
                remaining.len()
            )));
        };
        let eq = eqs.remove(ei);
        let b = eq.coefficient_of(v, 0);
        let value = RationalFunction::new(-&b, a.clone())
            .map_err(|e| OracleError::NotReducible(e.to_string()))?;
        for other in eqs.iter_mut() {
            let d = other.degree_in(v);
            if d == 0 {
                continue;
            }
            *other = other.substitute(v, &value).num;
            if other.is_zero() {
                return Err(OracleError::NotReducible(
                    "an equation vanished identically after substitution".into(),
                ));
            }
            if a.as_constant().is_none() {
                cleared.push(ClearedFactor {
                    factor: a.clone(),
                    power: d,
                    sign: if d % 2 == 0 { 1 } else { sign },
                });
            }
        }
        remaining.retain(|&x| x != v);
        substitutions.push(Substitution { var: v, value });
    }

    let target = remaining[0];
    let mut final_poly = eqs.pop().expect("one equation left");
    if sys.domain[target].lo >= 0.0 {
        let content = final_poly.monomial_content();
        let mut exps = vec![0u32; content.dim()];
        exps[target] = content.exponents()[target];
        if exps[target] > 0 {
            final_poly = final_poly.div_monomial(&crate::polysys::Monomial::from_exponents(exps));
        }
    }
    if final_poly.degree_in(target) == 0 {
        return Err(OracleError::NotReducible(
            "final equation does not involve the remaining variable".into(),
        ));
    }
    Ok(UnivariateReduction {
        target,
        substitutions,
        final_poly,
        cleared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::parse_polynomial;

    #[test]
    fn conservation_substitution() {
        let text = "vars: t1 t2\nparams: k1 k2 k3 k4 k5\neq: k1*t1^2*t2 - 2*k2*t1^3 - k3*t1*t2^2 + 2*k4*t2^3\neq: t1 + t2 - k5\n";
        let sys = ParametrizedSystem::parse(text).unwrap();
        let red = reduce_to_univariate(&sys).unwrap();
        assert_eq!(red.target, 0);
        assert_eq!(red.substitutions.len(), 1);
        assert_eq!(red.substitutions[0].var, 1);
        assert!(red.cleared.is_empty());
        let expected = parse_polynomial(
            "k1*t1^2*(k5 - t1) - 2*k2*t1^3 - k3*t1*(k5 - t1)^2 + 2*k4*(k5 - t1)^3",
            &sys.space,
        )
        .unwrap();
        let diff = &red.final_poly - &expected;
        assert!(diff.chop(1e-14).is_zero(), "{}", red.final_poly.display(&sys.space));
    }

    #[test]
    fn triangular_system() {
        let text = "vars: t1 t2\nparams: k1 k2 k3\ndomain: (0,1) (0,1)\neq: k1 - k3*t1\neq: k2 - k3*t1*t2\n";
        let sys = ParametrizedSystem::parse(text).unwrap();
        let red = reduce_to_univariate(&sys).unwrap();
        assert_eq!((red.target, red.substitutions[0].var), (1, 0));
        assert_eq!(red.cleared.len(), 1);
        let at = [0.0, 0.0, 0.3, 0.2, 0.5];
        let t1 = red.substitutions[0].value.evaluate(&at).unwrap();
        assert!((t1 - 0.6).abs() < 1e-15);
        let mut root_point = at;
        root_point[1] = 0.2 / 0.3;
        assert!(red.final_poly.evaluate(&root_point).unwrap().abs() < 1e-14);
    }

    #[test]
    fn identity_and_failure() {
        let sys = ParametrizedSystem::parse("vars: t\nparams: a b\neq: a*t^2 - b\n").unwrap();
        let red = reduce_to_univariate(&sys).unwrap();
        assert!(red.is_identity());
        let sys = ParametrizedSystem::parse(
            "vars: x y\nparams: a b\ndomain: (-inf,inf) (-inf,inf)\neq: x^2 + y^2 - a\neq: x^2 - y^2 - b\n",
        )
        .unwrap();
        assert!(matches!(reduce_to_univariate(&sys), Err(OracleError::NotReducible(_))));
    }
}
