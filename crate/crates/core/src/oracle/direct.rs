use super::reduce::UnivariateReduction;
use super::sturm::{SturmChain, ZERO_TOL};
use super::OracleError;
use crate::mc::Accumulator;
use crate::polysys::{CompiledPoly, CompiledRational, Interval, ParametrizedSystem};
use crate::sampling::{mix_keys, Distribution, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct DirectOptions {
    pub seed: u64,
    pub workers: usize,
    pub stream_key: u64,
    /// Parameter samples per block.
    pub chunk: u64,
    /// Check back-substituted variables against their domain intervals.
    pub filter: bool,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            stream_key: 0,
            chunk: 10_000,
            filter: true,
        }
    }
}

/// Mean number of solutions in the domain over sampled parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Accepted parameter samples.
    pub n: u64,
    /// Samples redrawn because the count was ill-posed there.
    pub rejected: u64,
    pub max_count: usize,
}

impl DirectEstimate {
    pub fn rejection_rate(&self) -> f64 {
        self.rejected as f64 / (self.n + self.rejected) as f64
    }
}

/// Rejected fraction above which an estimate should not be trusted.
pub const MAX_REJECTION_RATE: f64 = 1e-3;
const MAX_CONSECUTIVE_REJECTIONS: u32 = 10_000;

struct Prepared<'a> {
    sys: &'a ParametrizedSystem,
    target: usize,
    /// Coefficients of the final polynomial, descending in the target.
    coefs: Vec<CompiledPoly>,
    subs: Vec<(usize, CompiledRational)>,
    dists: Vec<Distribution>,
    filter: bool,
}

impl Prepared<'_> {
    /// Count for one parameter point; `point` holds the parameters after the
    /// variable slots.
    fn count(&self, point: &mut [f64], coef_buf: &mut Vec<f64>) -> Result<usize, OracleError> {
        coef_buf.clear();
        let mut scale = 0.0;
        for c in &self.coefs {
            let v = c.eval(point);
            scale += c.eval_abs(point);
            coef_buf.push(v);
        }
        let lead = coef_buf[0];
        if !(lead.abs() > ZERO_TOL * scale) {
            return Err(OracleError::VanishingLeading);
        }
        let chain = SturmChain::new(coef_buf)?;
        let dom = self.sys.domain[self.target];
        if self.subs.is_empty() || !self.filter {
            return chain.count_in(dom.lo, dom.hi);
        }
        let roots = chain.roots_in(dom.lo, dom.hi)?;
        let mut count = 0;
        for r in roots {
            point[self.target] = r;
            let mut inside = true;
            for (var, value) in self.subs.iter().rev() {
                let (num, den) = value.eval_parts(point);
                if den == 0.0 {
                    return Err(OracleError::VanishingLeading);
                }
                let x = num / den;
                point[*var] = x;
                if !self.sys.domain[*var].contains(x) {
                    inside = false;
                    break;
                }
            }
            count += inside as usize;
        }
        Ok(count)
    }

    fn run_block(&self, seed: u64, stream: u64, samples: u64) -> Result<(Accumulator, u64, usize), OracleError> {
        let n = self.sys.n();
        let mut rng = RngStream::new(seed, stream);
        let mut point = vec![0.0; n + self.sys.m()];
        let mut buf = Vec::with_capacity(self.coefs.len());
        let mut acc = Accumulator::new();
        let mut rejected = 0u64;
        let mut max_count = 0;
        let mut streak = 0u32;
        while acc.count() < samples {
            for (x, d) in point[n..].iter_mut().zip(&self.dists) {
                *x = d.sample(&mut rng);
            }
            match self.count(&mut point, &mut buf) {
                Ok(c) => {
                    streak = 0;
                    max_count = max_count.max(c);
                    acc.push(c as f64)?;
                }
                Err(
                    OracleError::DegenerateAtZero
                    | OracleError::DegenerateAtBoundary(_)
                    | OracleError::NotSquarefree
                    | OracleError::VanishingLeading,
                ) => {
                    rejected += 1;
                    streak += 1;
                    if streak > MAX_CONSECUTIVE_REJECTIONS {
                        return Err(OracleError::TooManyRejections(rejected));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok((acc, rejected, max_count))
    }
}

/// Average the number of solutions in the domain over `samples` parameter
/// points drawn from the system's densities restricted to `param_box`.
/// Blocks of `opts.chunk` samples use stream `(seed, mix(stream_key, b))`,
/// so results do not depend on the number of workers.
pub fn direct_expectation(
    sys: &ParametrizedSystem,
    red: &UnivariateReduction,
    param_box: &[Interval],
    samples: u64,
    opts: &DirectOptions,
) -> Result<DirectEstimate, OracleError> {
    if param_box.len() != sys.m() {
        return Err(OracleError::Mismatch("parameter box dimension".into()));
    }
    if samples < 2 || opts.chunk == 0 {
        return Err(OracleError::Mismatch("need at least two samples and a positive chunk".into()));
    }
    let deg = red.final_poly.degree_in(red.target);
    let coefs = (0..=deg)
        .rev()
        .map(|p| CompiledPoly::new(&red.final_poly.coefficient_of(red.target, p)))
        .collect();
    let subs = red
        .substitutions
        .iter()
        .map(|s| (s.var, CompiledRational::new(&s.value)))
        .collect();
    let dists = param_box
        .iter()
        .zip(&sys.densities)
        .map(|(iv, d)| Distribution::from_density(*iv, *d))
        .collect::<Result<Vec<_>, _>>()?;
    let prep = Prepared {
        sys,
        target: red.target,
        coefs,
        subs,
        dists,
        filter: opts.filter,
    };

    let blocks = samples.div_ceil(opts.chunk);
    let len_of = |b: u64| opts.chunk.min(samples - b * opts.chunk);
    let workers = opts.workers.max(1) as u64;
    let mut total = Accumulator::new();
    let mut rejected = 0;
    let mut max_count = 0;
    let mut b = 0;
    while b < blocks {
        let batch = workers.min(blocks - b);
        let results: Vec<_> = if batch == 1 {
            vec![prep.run_block(opts.seed, mix_keys(opts.stream_key, b), len_of(b))]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (b..b + batch)
                    .map(|blk| {
                        let prep = &prep;
                        s.spawn(move || prep.run_block(opts.seed, mix_keys(opts.stream_key, blk), len_of(blk)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        for r in results {
            let (acc, rej, mx) = r?;
            total = total.merge(&acc);
            rejected += rej;
            max_count = max_count.max(mx);
        }
        b += batch;
    }
    let (value, stderr) = total.estimate()?;
    Ok(DirectEstimate {
        value,
        stderr,
        n: total.count(),
        rejected,
        max_count,
    })
}
