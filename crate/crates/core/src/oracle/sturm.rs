//! Sturm sequences for univariate real polynomials.
//!
//! Coefficient vectors are in descending degree order. The chain is built
//! in floating point and rebuilt over exact rationals whenever a remainder
//! loses most of its magnitude to cancellation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::OracleError;

/// Relative size below which a coefficient counts as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// A remainder whose leading coefficient falls this far below the scale of
/// the division is recomputed exactly.
const CANCELLATION_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct SturmChain {
    polys: Vec<Vec<f64>>,
}

impl SturmChain {
    /// Chain of a polynomial of degree at least one with nonzero leading
    /// coefficient. Fails with [`OracleError::NotSquarefree`] when the chain
    /// ends before reaching a constant.
    pub fn new(coeffs: &[f64]) -> Result<Self, OracleError> {
        let p = trim_leading(coeffs);
        if p.is_empty() || p.iter().any(|c| !c.is_finite()) {
            return Err(OracleError::VanishingLeading);
        }
        if norm1(&p) == 0.0 || p[0].abs() <= ZERO_TOL * norm1(&p) {
            return Err(OracleError::VanishingLeading);
        }
        if p.len() == 1 {
            return Ok(Self { polys: vec![p] });
        }
        match chain_f64(&p) {
            Some(polys) => Ok(Self { polys }),
            None => chain_exact(&p).map(|polys| Self { polys }),
        }
    }

    pub fn polys(&self) -> &[Vec<f64>] {
        &self.polys
    }

    pub fn degree(&self) -> usize {
        self.polys[0].len() - 1
    }

    fn variations(&self, signs: impl Iterator<Item = f64>) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for s in signs {
            if s == 0.0 {
                continue;
            }
            if last != 0.0 && (s > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn variations_at_zero_plus(&self) -> usize {
        self.variations(self.polys.iter().map(|p| lowest_nonzero(p)))
    }

    fn variations_at_zero_minus(&self) -> usize {
        self.variations(self.polys.iter().map(|p| {
            let tol = ZERO_TOL * norm1(p);
            match p.iter().rev().position(|c| c.abs() > tol) {
                Some(power) if power % 2 == 1 => -p[p.len() - 1 - power],
                Some(power) => p[p.len() - 1 - power],
                None => 0.0,
            }
        }))
    }

    fn variations_at_pos_inf(&self) -> usize {
        self.variations(self.polys.iter().map(|p| p[0]))
    }

    fn variations_at_neg_inf(&self) -> usize {
        self.variations(
            self.polys
                .iter()
                .map(|p| if (p.len() - 1) % 2 == 0 { p[0] } else { -p[0] }),
        )
    }

    fn variations_at(&self, x: f64) -> usize {
        self.variations(self.polys.iter().map(|p| horner(p, x)))
    }

    fn check_not_root(&self, x: f64) -> Result<(), OracleError> {
        let p = &self.polys[0];
        if x == 0.0 {
            if p[p.len() - 1].abs() <= ZERO_TOL * norm1(p) {
                return Err(OracleError::DegenerateAtZero);
            }
        } else if x.is_finite() && horner(p, x).abs() <= ZERO_TOL * horner_abs(p, x) {
            return Err(OracleError::DegenerateAtBoundary(x));
        }
        Ok(())
    }

    fn variations_at_bound(&self, x: f64) -> usize {
        if x == f64::INFINITY {
            self.variations_at_pos_inf()
        } else if x == f64::NEG_INFINITY {
            self.variations_at_neg_inf()
        } else if x == 0.0 {
            self.variations_at_zero_plus()
        } else {
            self.variations_at(x)
        }
    }

    /// Distinct real roots in the open interval `(lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> Result<usize, OracleError> {
        if !(lo < hi) {
            return Ok(0);
        }
        self.check_not_root(lo)?;
        self.check_not_root(hi)?;
        let upper = if hi == 0.0 {
            self.variations_at_zero_minus()
        } else {
            self.variations_at_bound(hi)
        };
        Ok(self.variations_at_bound(lo).saturating_sub(upper))
    }

    /// Roots in `(lo, hi)`, each refined by bisection to about `1e-13`
    /// relative accuracy.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Result<Vec<f64>, OracleError> {
        let total = self.count_in(lo, hi)?;
        let mut out = Vec::with_capacity(total);
        if total == 0 {
            return Ok(out);
        }
        let bound = cauchy_bound(&self.polys[0]);
        let a = lo.max(-bound);
        let b = hi.min(bound);
        let mut stack = vec![(a, b, total)];
        while let Some((a, b, k)) = stack.pop() {
            if k == 0 {
                continue;
            }
            if k == 1 {
                out.push(self.refine(a, b));
                continue;
            }
            let mut mid = 0.5 * (a + b);
            if horner(&self.polys[0], mid) == 0.0 {
                mid = a + 0.5000001 * (b - a);
            }
            if mid <= a || mid >= b {
                for _ in 0..k {
                    out.push(mid);
                }
                continue;
            }
            let left = self.variations_raw(a).saturating_sub(self.variations_at(mid)).min(k);
            stack.push((mid, b, k - left));
            stack.push((a, mid, left));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    fn variations_raw(&self, x: f64) -> usize {
        if x == 0.0 {
            self.variations_at_zero_plus()
        } else {
            self.variations_at(x)
        }
    }

    /// Bisection on the sign of the polynomial, or on the Sturm count when
    /// the endpoints do not bracket a sign change.
    fn refine(&self, mut a: f64, mut b: f64) -> f64 {
        let p = &self.polys[0];
        let sign_at = |x: f64| {
            if x == 0.0 {
                lowest_nonzero(p).signum()
            } else {
                horner(p, x).signum()
            }
        };
        let sa = sign_at(a);
        let sb = sign_at(b);
        let brackets = sa != 0.0 && sb != 0.0 && sa != sb;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b || (b - a) <= 1e-13 * mid.abs().max(1e-300) {
                break;
            }
            let go_left = if brackets {
                let sm = sign_at(mid);
                if sm == 0.0 {
                    return mid;
                }
                sm != sa
            } else {
                self.variations_raw(a).saturating_sub(self.variations_at(mid)) == 1
            };
            if go_left {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// Number of distinct roots in `(0, ∞)`.
pub fn sturm_count_positive(coeffs: &[f64]) -> Result<usize, OracleError> {
    SturmChain::new(coeffs)?.count_in(0.0, f64::INFINITY)
}

fn trim_leading(coeffs: &[f64]) -> Vec<f64> {
    let start = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    coeffs[start..].to_vec()
}

fn norm1(p: &[f64]) -> f64 {
    p.iter().map(|c| c.abs()).sum()
}

fn max_abs(p: &[f64]) -> f64 {
    p.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

fn lowest_nonzero(p: &[f64]) -> f64 {
    let tol = ZERO_TOL * norm1(p);
    p.iter().rev().copied().find(|c| c.abs() > tol).unwrap_or(0.0)
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_abs(p: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    p.iter().fold(0.0, |acc, &c| acc * ax + c.abs())
}

fn cauchy_bound(p: &[f64]) -> f64 {
    let lead = p[0].abs();
    1.0 + p[1..].iter().fold(0.0f64, |m, c| m.max(c.abs() / lead))
}

fn normalized(p: Vec<f64>) -> Vec<f64> {
    let m = max_abs(&p);
    p.into_iter().map(|c| c / m).collect()
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let d = p.len() - 1;
    p[..d].iter().enumerate().map(|(i, &c)| c * (d - i) as f64).collect()
}

/// `-rem(a, b)` with the magnitude of the largest intermediate value, or
/// `None` when cancellation makes the result untrustworthy.
fn neg_rem_f64(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let mut scale = max_abs(a);
    while r.len() > db {
        let q = r[0] / b[0];
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= q * bi;
        }
        scale = scale.max(q.abs() * max_abs(b));
        r.remove(0);
    }
    let start = r.iter().position(|c| c.abs() > ZERO_TOL * scale);
    match start {
        None => None,
        Some(s) => {
            if s > 0 || r[s].abs() < CANCELLATION_TOL * scale {
                return None;
            }
            Some(r[s..].iter().map(|c| -c).collect())
        }
    }
}

fn chain_f64(p: &[f64]) -> Option<Vec<Vec<f64>>> {
    let mut polys = vec![normalized(p.to_vec())];
    polys.push(normalized(derivative(&polys[0])));
    while polys.last().unwrap().len() > 1 {
        let k = polys.len();
        let r = neg_rem_f64(&polys[k - 2], &polys[k - 1])?;
        polys.push(normalized(r));
    }
    Some(polys)
}

fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

fn chain_exact(p: &[f64]) -> Result<Vec<Vec<f64>>, OracleError> {
    let p0: Vec<BigRational> = p.iter().map(|&c| to_rational(c)).collect();
    let d = p0.len() - 1;
    let p1: Vec<BigRational> = p0[..d]
        .iter()
        .enumerate()
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(d - i)))
        .collect();
    let mut chain = vec![p0, p1];
    while chain.last().unwrap().len() > 1 {
        let k = chain.len();
        let mut r = chain[k - 2].clone();
        let b = &chain[k - 1];
        let db = b.len() - 1;
        while r.len() > db {
            let q = &r[0] / &b[0];
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= &q * bi;
            }
            r.remove(0);
        }
        let Some(s) = r.iter().position(|c| !c.is_zero()) else {
            return Err(OracleError::NotSquarefree);
        };
        let lead = r[s].abs();
        chain.push(r[s..].iter().map(|c| -(c / &lead)).collect());
    }
    Ok(chain
        .into_iter()
        .map(|p| {
            let m = p.iter().map(|c| c.abs()).max().unwrap();
            p.iter().map(|c| (c / &m).to_f64().unwrap_or(0.0)).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        let mut p = vec![1.0];
        for &r in roots {
            let mut q = p.clone();
            q.push(0.0);
            for i in 0..p.len() {
                q[i + 1] -= r * p[i];
            }
            p = q;
        }
        p
    }

    #[test]
    fn small_cases() {
        assert_eq!(sturm_count_positive(&[1.0, 0.0, -1.0]).unwrap(), 1);
        assert_eq!(sturm_count_positive(&from_roots(&[1.0, 2.0, 3.0])).unwrap(), 3);
        assert_eq!(sturm_count_positive(&[1.0, 0.0, 1.0]).unwrap(), 0);
        assert_eq!(sturm_count_positive(&[2.0, -4.0]).unwrap(), 1);
        assert_eq!(sturm_count_positive(&[3.0]).unwrap(), 0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(sturm_count_positive(&[1.0, -1.0, 0.0]), Err(OracleError::DegenerateAtZero));
        assert_eq!(
            sturm_count_positive(&from_roots(&[1.0, 1.0, 2.0])),
            Err(OracleError::NotSquarefree)
        );
        assert_eq!(sturm_count_positive(&[0.0, 0.0]), Err(OracleError::VanishingLeading));
    }

    #[test]
    fn intervals_and_roots() {
        let chain = SturmChain::new(&from_roots(&[-2.0, 0.5, 1.5, 4.0])).unwrap();
        assert_eq!(chain.count_in(f64::NEG_INFINITY, f64::INFINITY).unwrap(), 4);
        assert_eq!(chain.count_in(0.0, 1.0).unwrap(), 1);
        assert_eq!(chain.count_in(f64::NEG_INFINITY, 0.0).unwrap(), 1);
        assert_eq!(chain.count_in(-3.0, 0.0).unwrap(), 1);
        let roots = chain.roots_in(0.0, f64::INFINITY).unwrap();
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([0.5, 1.5, 4.0]) {
            assert!((r - e).abs() < 1e-10, "{roots:?}");
        }
        assert_eq!(chain.count_in(0.5, 2.0), Err(OracleError::DegenerateAtBoundary(0.5)));
    }

    #[test]
    fn close_roots_fall_back_to_exact_chain() {
        let p = from_roots(&[1.0, 1.0 + 1e-6, 3.0]);
        assert_eq!(sturm_count_positive(&p).unwrap(), 3);
        let roots = SturmChain::new(&p).unwrap().roots_in(0.0, 10.0).unwrap();
        assert_eq!(roots.len(), 3);
    }

    #[test]
    fn badly_scaled_coefficients() {
        let p: Vec<f64> = from_roots(&[1e-3, 2.0, 7e3]).iter().map(|c| c * 1e20).collect();
        assert_eq!(sturm_count_positive(&p).unwrap(), 3);
    }
}
