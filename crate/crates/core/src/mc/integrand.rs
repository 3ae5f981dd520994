use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::McError;
use crate::polysys::{
    BoundHint, CompiledRational, Interval, LinearDecomposition, ParamDensity, ParametrizedSystem,
};
use crate::sampling::{build_domain_plan, Distribution, DomainPlan};

/// Denominators below this magnitude count as singular.
pub const SINGULAR_EPS: f64 = 1e-300;

/// Coefficient magnitude ratio above which the integrand is flagged as
/// badly scaled.
pub const SCALE_DISPARITY_LIMIT: f64 = 1e10;

#[derive(Debug)]
struct Compiled {
    g: Vec<CompiledRational>,
    jac: CompiledRational,
    n: usize,
    m: usize,
    linear: Vec<usize>,
    rest: Vec<usize>,
    coef_span: f64,
    degenerate_jacobian: bool,
}

/// Everything needed to evaluate the Kac-Rice integrand on one parameter box.
#[derive(Clone, Debug)]
pub struct IntegrandSpec {
    compiled: Arc<Compiled>,
    /// Densities of the linear parameters, in equation order.
    pub rho_linear: Vec<Distribution>,
    /// Sampling distributions of the remaining parameters, ascending index.
    pub rho_rest: Vec<Distribution>,
    pub plan: DomainPlan,
    /// Bezout bound: product of the total degrees in the variables.
    pub bezout: u64,
}

/// Value of one integrand evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub singular: bool,
}

impl Sample {
    const ZERO: Sample = Sample {
        value: 0.0,
        singular: false,
    };
    const SINGULAR: Sample = Sample {
        value: 0.0,
        singular: true,
    };
}

impl IntegrandSpec {
    /// Integrand for `sys` over its own parameter box.
    pub fn new(sys: &ParametrizedSystem, dec: &LinearDecomposition) -> Result<Self, McError> {
        Self::on_box(sys, dec, &sys.param_box)
    }

    /// Integrand for `sys` with parameters restricted to `param_box`.
    pub fn on_box(
        sys: &ParametrizedSystem,
        dec: &LinearDecomposition,
        param_box: &[Interval],
    ) -> Result<Self, McError> {
        let n = sys.n();
        let m = sys.m();
        if dec.n() != n || param_box.len() != m || dec.space != sys.space {
            return Err(McError::Mismatch("decomposition does not match system".into()));
        }
        let g: Vec<CompiledRational> = dec.g.iter().map(CompiledRational::new).collect();
        let jac = CompiledRational::new(&dec.jac_det);
        let coef_span = coefficient_span(dec);
        let degenerate_jacobian = jacobian_vanishes(dec, sys, param_box);
        let compiled = Arc::new(Compiled {
            g,
            jac,
            n,
            m,
            linear: dec.linear.clone(),
            rest: dec.rest.clone(),
            coef_span,
            degenerate_jacobian,
        });
        let mut spec = IntegrandSpec {
            compiled,
            rho_linear: Vec::new(),
            rho_rest: Vec::new(),
            plan: DomainPlan { axes: Vec::new() },
            bezout: bezout_bound(sys),
        };
        spec.set_box(sys, param_box)?;
        Ok(spec)
    }

    /// Same integrand restricted to another parameter box.
    pub fn restricted(&self, sys: &ParametrizedSystem, param_box: &[Interval]) -> Result<Self, McError> {
        let mut spec = self.clone();
        spec.set_box(sys, param_box)?;
        Ok(spec)
    }

    fn set_box(&mut self, sys: &ParametrizedSystem, param_box: &[Interval]) -> Result<(), McError> {
        let c = &self.compiled;
        let dist = |j: usize| -> Result<Distribution, McError> {
            Ok(Distribution::from_density(param_box[j], sys.densities[j])?)
        };
        self.rho_linear = c.linear.iter().map(|&j| dist(j)).collect::<Result<_, _>>()?;
        self.rho_rest = c.rest.iter().map(|&j| dist(j)).collect::<Result<_, _>>()?;
        // Hints tied to a linear parameter cannot bound the sampled variables.
        let hints: Vec<Option<BoundHint>> = sys
            .bound_hints
            .iter()
            .map(|h| match h {
                Some(BoundHint::Param { index, .. }) if c.linear.contains(index) => None,
                other => *other,
            })
            .collect();
        self.plan = build_domain_plan(&sys.domain, &hints);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.compiled.n
    }

    pub fn m(&self) -> usize {
        self.compiled.m
    }

    pub fn rest_indices(&self) -> &[usize] {
        &self.compiled.rest
    }

    pub fn linear_indices(&self) -> &[usize] {
        &self.compiled.linear
    }

    /// Ratio of largest to smallest coefficient magnitude in `g` and the
    /// Jacobian determinant.
    pub fn coefficient_span(&self) -> f64 {
        self.compiled.coef_span
    }

    /// True if the Jacobian numerator vanished at every probe point.
    pub fn degenerate_jacobian(&self) -> bool {
        self.compiled.degenerate_jacobian
    }

    /// Length of the scratch buffer used by [`IntegrandSpec::evaluate`].
    pub fn scratch_len(&self) -> usize {
        self.compiled.n + self.compiled.m
    }

    /// Evaluate `Q` at unit coordinates `u` (one per variable) on `branch`,
    /// with the remaining parameters set to `kbar` (ascending index).
    pub fn evaluate(&self, u: &[f64], kbar: &[f64], branch: usize, scratch: &mut [f64]) -> Sample {
        let c = &*self.compiled;
        let n = c.n;
        for (&j, &v) in c.rest.iter().zip(kbar) {
            scratch[n + j] = v;
        }
        let (t, params) = scratch.split_at_mut(n);
        let weight = self.plan.map(branch, u, params, t);
        if weight == 0.0 {
            return Sample::ZERO;
        }
        let mut rho = weight;
        for (gi, dist) in c.g.iter().zip(&self.rho_linear) {
            let (num, den) = gi.eval_parts(scratch);
            if !(den.abs() >= SINGULAR_EPS) {
                return Sample::SINGULAR;
            }
            let d = dist.density(num / den);
            if d == 0.0 {
                return Sample::ZERO;
            }
            rho *= d;
        }
        let (jn, jd) = c.jac.eval_parts(scratch);
        if !(jd.abs() >= SINGULAR_EPS) {
            return Sample::SINGULAR;
        }
        let value = (jn / jd).abs() * rho;
        if value.is_finite() {
            Sample {
                value,
                singular: false,
            }
        } else {
            Sample::SINGULAR
        }
    }

    /// Evaluate at a point given in domain coordinates `t` (bounded axes
    /// only, weight 1), for diagnostics and tests.
    pub fn evaluate_at(&self, t: &[f64], kbar: &[f64]) -> f64 {
        let c = &*self.compiled;
        let mut x = vec![0.0; c.n + c.m];
        x[..c.n].copy_from_slice(t);
        for (&j, &v) in c.rest.iter().zip(kbar) {
            x[c.n + j] = v;
        }
        let mut rho = 1.0;
        for (gi, dist) in c.g.iter().zip(&self.rho_linear) {
            let (num, den) = gi.eval_parts(&x);
            if !(den.abs() >= SINGULAR_EPS) {
                return 0.0;
            }
            rho *= dist.density(num / den);
        }
        if rho == 0.0 {
            return 0.0;
        }
        let (jn, jd) = c.jac.eval_parts(&x);
        if !(jd.abs() >= SINGULAR_EPS) {
            return 0.0;
        }
        (jn / jd).abs() * rho
    }
}

fn coefficient_span(dec: &LinearDecomposition) -> f64 {
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let polys = dec
        .g
        .iter()
        .flat_map(|g| [&g.num, &g.den])
        .chain([&dec.jac_det.num, &dec.jac_det.den]);
    for p in polys {
        if !p.is_zero() {
            hi = hi.max(p.max_abs_coef());
            lo = lo.min(p.min_abs_coef());
        }
    }
    if lo.is_finite() && lo > 0.0 {
        hi / lo
    } else {
        1.0
    }
}

/// Probe the Jacobian numerator at random points of the domain and box.
fn jacobian_vanishes(dec: &LinearDecomposition, sys: &ParametrizedSystem, param_box: &[Interval]) -> bool {
    let num = &dec.jac_det.num;
    if num.is_zero() {
        return true;
    }
    let n = sys.n();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a61_635f_7072_6f62);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut x = vec![0.0; n + sys.m()];
    for _ in 0..16 {
        for (i, iv) in sys.domain.iter().enumerate() {
            let lo = if iv.lo.is_finite() { iv.lo } else { iv.hi.min(0.0) - 2.0 };
            let hi = if iv.hi.is_finite() { iv.hi } else { lo.max(0.0) + 2.0 };
            x[i] = lo + (hi - lo) * unit();
        }
        for (j, iv) in param_box.iter().enumerate() {
            x[n + j] = iv.lo + iv.len() * unit();
        }
        let mut scale = 0.0;
        let mut val = 0.0;
        for (mono, c) in num.terms() {
            let v = c * mono.evaluate(&x);
            val += v;
            scale += v.abs();
        }
        if val.abs() > 1e-12 * scale {
            return false;
        }
    }
    true
}

fn bezout_bound(sys: &ParametrizedSystem) -> u64 {
    let n = sys.n();
    sys.equations
        .iter()
        .map(|f| {
            f.terms()
                .map(|(m, _)| m.exponents()[..n].iter().map(|&e| e as u64).sum::<u64>())
                .max()
                .unwrap_or(0)
                .max(1)
        })
        .product()
}

/// Parameter distributions for a whole box, one per parameter.
pub fn param_distributions(
    param_box: &[Interval],
    densities: &[ParamDensity],
) -> Result<Vec<Distribution>, McError> {
    param_box
        .iter()
        .zip(densities)
        .map(|(iv, d)| Ok(Distribution::from_density(*iv, *d)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::decompose;

    fn spec(text: &str) -> IntegrandSpec {
        let sys = ParametrizedSystem::parse(text).unwrap();
        let dec = decompose(&sys).unwrap();
        IntegrandSpec::new(&sys, &dec).unwrap()
    }

    #[test]
    fn single_equation_values() {
        let s = spec("vars: t\nparams: k1 k2\nlinear: k1\neq: k2*t - k1\n");
        assert_eq!(s.evaluate_at(&[0.5], &[0.5]), 0.5);
        assert_eq!(s.evaluate_at(&[4.0], &[0.5]), 0.0);
        assert_eq!(s.plan.branch_count(), 2);
        let mut scratch = vec![0.0; s.scratch_len()];
        // Inverted branch: u = 0.5 maps to t = 2, weight 4.
        let q = s.evaluate(&[0.5], &[0.25], 1, &mut scratch);
        assert_eq!(q.value, 0.25 * 4.0);
    }

    #[test]
    fn two_equation_value() {
        let s = spec(
            "vars: t1 t2\nparams: k1 k2 k3\ndomain: (0,1) (0,1)\neq: k1 - k3*t1\neq: k2 - k3*t1*t2\n",
        );
        assert!((s.evaluate_at(&[0.5, 0.5], &[0.5]) - 0.125).abs() < 1e-15);
        assert_eq!(s.bezout, 2);
    }

    #[test]
    fn singular_points_contribute_zero() {
        let s = spec("vars: t\nparams: k1 k2\nlinear: k1\neq: k2*t - k1\n");
        let mut scratch = vec![0.0; s.scratch_len()];
        let q = s.evaluate(&[0.5], &[0.0], 0, &mut scratch);
        assert_eq!(q.value, 0.0);
        let s = spec("vars: t\nparams: k\ndomain: (0,1)\neq: t*k - 1\n");
        let q = s.evaluate(&[1e-320], &[], 0, &mut scratch);
        assert_eq!(q, Sample::SINGULAR);
    }

    #[test]
    fn flags_scale_disparity_and_degeneracy() {
        let s = spec("vars: t\nparams: k1 k2\nlinear: k1\neq: 1e12*k2*t^2 - k1 + 0.5\n");
        assert!(s.coefficient_span() > SCALE_DISPARITY_LIMIT);
        let s = spec("vars: t\nparams: k1 k2\nlinear: k1\neq: k2 - k1\n");
        assert!(s.degenerate_jacobian());
    }
}
