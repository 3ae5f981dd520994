//! Parameter distributions, reproducible random streams, and the mapping
//! of (possibly unbounded) variable domains onto unit cubes.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::polysys::{BoundHint, Interval, ParamDensity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution on axis {axis} is not symmetric about its interval center")]
    AsymmetricDistribution { axis: usize },
    #[error("point has {got} coordinates, box has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Uniform {
        a: f64,
        b: f64,
    },
    /// Normal(mean, sd) conditioned on `[a, b]`.
    TruncNormal {
        a: f64,
        b: f64,
        mean: f64,
        sd: f64,
        /// CDF bounds of the sampled tail, mirrored when `a` lies above the mean.
        p_lo: f64,
        p_hi: f64,
        mirrored: bool,
        /// `1 / (sd · mass · sqrt(2π))`.
        norm: f64,
    },
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self, SamplingError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SamplingError::InvalidDistribution(format!(
                "uniform needs finite a < b, got ({a}, {b})"
            )));
        }
        Ok(Distribution::Uniform { a, b })
    }

    pub fn trunc_normal(a: f64, b: f64, mean: f64, sd: f64) -> Result<Self, SamplingError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SamplingError::InvalidDistribution(format!(
                "truncated normal needs finite a < b, got ({a}, {b})"
            )));
        }
        if !(sd.is_finite() && sd > 0.0 && mean.is_finite()) {
            return Err(SamplingError::InvalidDistribution(format!(
                "truncated normal needs finite mean and sd > 0, got ({mean}, {sd})"
            )));
        }
        let n = std_normal();
        let mirrored = (a - mean) / sd > 0.0;
        let (p_lo, p_hi) = if mirrored {
            // Both ends in the upper tail: work in the mirrored lower tail
            // where the CDF keeps its precision.
            (n.cdf(-(b - mean) / sd), n.cdf(-(a - mean) / sd))
        } else {
            (n.cdf((a - mean) / sd), n.cdf((b - mean) / sd))
        };
        let mass = p_hi - p_lo;
        if !(mass > 0.0) {
            return Err(SamplingError::InvalidDistribution(format!(
                "interval ({a}, {b}) carries no normal mass"
            )));
        }
        Ok(Distribution::TruncNormal {
            a,
            b,
            mean,
            sd,
            p_lo,
            p_hi,
            mirrored,
            norm: 1.0 / (sd * mass * (2.0 * std::f64::consts::PI).sqrt()),
        })
    }

    pub fn from_density(iv: Interval, d: ParamDensity) -> Result<Self, SamplingError> {
        match d {
            ParamDensity::Uniform => Self::uniform(iv.lo, iv.hi),
            ParamDensity::TruncNormal { mean, sd } => Self::trunc_normal(iv.lo, iv.hi, mean, sd),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { a, b } | Distribution::TruncNormal { a, b, .. } => (a, b),
        }
    }

    pub fn center(&self) -> f64 {
        let (a, b) = self.bounds();
        a + (b - a) / 2.0
    }

    /// Whether the density is invariant under reflection through the center.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            Distribution::Uniform { .. } => true,
            Distribution::TruncNormal { mean, .. } => mean == self.center(),
        }
    }

    /// Inverse-CDF transform of one uniform draw `u ∈ (0,1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => a + (b - a) * u,
            Distribution::TruncNormal {
                a,
                b,
                mean,
                sd,
                p_lo,
                p_hi,
                mirrored,
                ..
            } => {
                let n = std_normal();
                let z = if mirrored {
                    -n.inverse_cdf(p_lo + (1.0 - u) * (p_hi - p_lo))
                } else {
                    n.inverse_cdf(p_lo + u * (p_hi - p_lo))
                };
                (mean + sd * z).clamp(a, b)
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.next_open01())
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => {
                if a <= x && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Distribution::TruncNormal {
                a,
                b,
                mean,
                sd,
                norm,
                ..
            } => {
                if !(a <= x && x <= b) {
                    return 0.0;
                }
                // Symmetric in (x - mean), so reflected points get identical values.
                let z = (x - mean).abs() / sd;
                norm * (-0.5 * z * z).exp()
            }
        }
    }
}

/// Reflect `point` through the center of the box spanned by `dists`.
pub fn reflect(point: &[f64], dists: &[Distribution]) -> Result<Vec<f64>, SamplingError> {
    if point.len() != dists.len() {
        return Err(SamplingError::DimensionMismatch {
            expected: dists.len(),
            got: point.len(),
        });
    }
    point
        .iter()
        .zip(dists)
        .enumerate()
        .map(|(axis, (&x, d))| {
            if !d.is_symmetric() {
                return Err(SamplingError::AsymmetricDistribution { axis });
            }
            let (a, b) = d.bounds();
            Ok(a + b - x)
        })
        .collect()
}

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Deterministic 64-bit mixing of two keys into a stream id.
pub fn mix_keys(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(29);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map from the open unit interval onto a half-line piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitTransform {
    pub offset: f64,
    /// +1 or -1.
    pub sign: f64,
    /// Use `1/x` (weight `1/x²`) instead of `x` (weight 1).
    pub inverted: bool,
}

impl UnitTransform {
    #[inline]
    pub fn apply(&self, x: f64) -> (f64, f64) {
        if self.inverted {
            (self.offset + self.sign / x, 1.0 / (x * x))
        } else {
            (self.offset + self.sign * x, 1.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxisPlan {
    Bounded { lo: f64, hi: f64 },
    /// `(lo, min(hi, hint))`, the upper end depending on the parameters.
    Hinted { lo: f64, hi: f64, hint: BoundHint },
    Split(Vec<UnitTransform>),
}

impl AxisPlan {
    fn branches(&self) -> usize {
        match self {
            AxisPlan::Split(v) => v.len(),
            _ => 1,
        }
    }
}

/// How each variable axis is sampled, and the resulting branch product.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainPlan {
    pub axes: Vec<AxisPlan>,
}

pub fn build_domain_plan(domain: &[Interval], hints: &[Option<BoundHint>]) -> DomainPlan {
    let axes = domain
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let hint = hints.get(i).copied().flatten();
            match hint {
                Some(BoundHint::Const(c)) if iv.lo.is_finite() => AxisPlan::Bounded {
                    lo: iv.lo,
                    hi: iv.hi.min(c),
                },
                Some(h @ BoundHint::Param { .. }) if iv.lo.is_finite() => AxisPlan::Hinted {
                    lo: iv.lo,
                    hi: iv.hi,
                    hint: h,
                },
                _ => split_axis(*iv),
            }
        })
        .collect();
    DomainPlan { axes }
}

fn split_axis(iv: Interval) -> AxisPlan {
    let t = |offset, sign, inverted| UnitTransform {
        offset,
        sign,
        inverted,
    };
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => AxisPlan::Bounded {
            lo: iv.lo,
            hi: iv.hi,
        },
        (true, false) => AxisPlan::Split(vec![t(iv.lo, 1.0, false), t(iv.lo, 1.0, true)]),
        (false, true) => AxisPlan::Split(vec![t(iv.hi, -1.0, false), t(iv.hi, -1.0, true)]),
        (false, false) => AxisPlan::Split(vec![
            t(0.0, -1.0, true),
            t(0.0, -1.0, false),
            t(0.0, 1.0, false),
            t(0.0, 1.0, true),
        ]),
    }
}

impl DomainPlan {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn branch_count(&self) -> usize {
        self.axes.iter().map(AxisPlan::branches).product()
    }

    /// Map unit coordinates `u` on branch `branch` to domain points `t`,
    /// returning the Jacobian weight of the map (`1/μ(t)`), or 0 when the
    /// hinted interval is empty for these parameters.
    #[inline]
    pub fn map(&self, branch: usize, u: &[f64], params: &[f64], t: &mut [f64]) -> f64 {
        let mut b = branch;
        let mut weight = 1.0;
        for (i, axis) in self.axes.iter().enumerate() {
            match axis {
                AxisPlan::Bounded { lo, hi } => {
                    t[i] = lo + (hi - lo) * u[i];
                    weight *= hi - lo;
                }
                AxisPlan::Hinted { lo, hi, hint } => {
                    let top = hi.min(hint.value(params));
                    if !(top > *lo) {
                        return 0.0;
                    }
                    t[i] = lo + (top - lo) * u[i];
                    weight *= top - lo;
                }
                AxisPlan::Split(ts) => {
                    let k = ts.len();
                    let (x, w) = ts[b % k].apply(u[i]);
                    b /= k;
                    t[i] = x;
                    weight *= w;
                }
            }
        }
        weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_moments() {
        let d = Distribution::uniform(0.0, 1.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002);
        let d = Distribution::uniform(2.0, 4.0).unwrap();
        assert!((0..10_000).all(|_| {
            let x = d.sample(&mut rng);
            (2.0..=4.0).contains(&x)
        }));
    }

    #[test]
    fn wide_trunc_normal_is_nearly_uniform() {
        let d = Distribution::trunc_normal(0.0, 1.0, 0.5, 10.0).unwrap();
        let mut rng = RngStream::new(7, 3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var * 12.0 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn densities() {
        let d = Distribution::uniform(0.0, 2.0).unwrap();
        assert_eq!(d.density(1.0), 0.5);
        assert_eq!(d.density(3.0), 0.0);
        let d = Distribution::trunc_normal(0.0, 1.0, 0.5, 0.1).unwrap();
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let integral: f64 = (0..steps).map(|i| d.density((i as f64 + 0.5) * h) * h).sum();
        assert!((integral - 1.0).abs() < 1e-6, "{integral}");
        for x in [0.125, 0.3125, 0.4375] {
            assert_eq!(d.density(x), d.density(1.0 - x));
        }
        assert_eq!(d.density(1.5), 0.0);
    }

    #[test]
    fn upper_tail_sampling_stays_accurate() {
        let d = Distribution::trunc_normal(10.0, 11.0, 0.0, 1.0).unwrap();
        let mut rng = RngStream::new(0, 0);
        let mean = (0..10_000).map(|_| d.sample(&mut rng)).sum::<f64>() / 10_000.0;
        // Mean of a normal truncated far in the tail is just above the cut.
        assert!(mean > 10.0 && mean < 10.2, "{mean}");
    }

    #[test]
    fn reflection() {
        let b = [Distribution::uniform(0.0, 2.0).unwrap()];
        assert_eq!(reflect(&[0.5], &b).unwrap(), vec![1.5]);
        assert_eq!(reflect(&[1.0], &b).unwrap(), vec![1.0]);
        let b = [
            Distribution::uniform(1.0, 3.0).unwrap(),
            Distribution::uniform(2.0, 4.0).unwrap(),
        ];
        assert_eq!(reflect(&[1.5, 3.5], &b).unwrap(), vec![2.5, 2.5]);
        let skew = [Distribution::trunc_normal(0.0, 1.0, 0.2, 0.1).unwrap()];
        assert_eq!(
            reflect(&[0.3], &skew),
            Err(SamplingError::AsymmetricDistribution { axis: 0 })
        );
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(42, 5);
        let mut b = RngStream::new(42, 5);
        let mut c = RngStream::new(42, 6);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn plan_shapes() {
        let pos = Interval::positive();
        let p = build_domain_plan(&[pos], &[Some(BoundHint::Const(5.0))]);
        assert_eq!(p.axes, vec![AxisPlan::Bounded { lo: 0.0, hi: 5.0 }]);
        assert_eq!(build_domain_plan(&[pos], &[None]).branch_count(), 2);
        assert_eq!(build_domain_plan(&[pos, pos], &[None, None]).branch_count(), 4);
        let line = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(build_domain_plan(&[line], &[None]).branch_count(), 4);
    }

    #[test]
    fn hinted_axis_uses_parameter() {
        let p = build_domain_plan(
            &[Interval::positive()],
            &[Some(BoundHint::Param { index: 1, scale: 2.0 })],
        );
        let mut t = [0.0];
        let w = p.map(0, &[0.25], &[9.0, 3.0], &mut t);
        assert_eq!((t[0], w), (1.5, 6.0));
    }
}
