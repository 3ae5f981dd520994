use std::fmt;

use super::accumulator::Accumulator;
use super::integrand::{IntegrandSpec, SCALE_DISPARITY_LIMIT};
use super::McError;
use crate::sampling::{mix_keys, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct StoppingRule {
    /// Target relative standard error.
    pub rel_err: f64,
    /// Range the estimate must reach before the error target counts.
    pub plausible: (f64, f64),
    /// Fewest evaluations before convergence may be declared.
    pub min_n: u64,
    pub max_n: u64,
    /// Samples per block; the stop criterion is checked between blocks.
    pub chunk: u64,
    /// Ramp checkpoints inside the first block grow by this factor.
    pub growth: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            rel_err: 1e-2,
            plausible: (0.0, f64::INFINITY),
            min_n: 1_000,
            max_n: 1_000_000_000_000,
            chunk: 100_000,
            growth: 10,
        }
    }
}

impl StoppingRule {
    pub fn with_plausible(mut self, lo: f64, hi: f64) -> Self {
        self.plausible = (lo, hi);
        self
    }

    pub fn with_max_n(mut self, max_n: u64) -> Self {
        self.max_n = max_n;
        self
    }

    pub fn validate(&self) -> Result<(), McError> {
        let (lo, hi) = self.plausible;
        if !(self.rel_err > 0.0) {
            return Err(McError::InvalidRule("rel_err must be positive".into()));
        }
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(McError::InvalidRule("plausible interval needs lo <= hi".into()));
        }
        if self.chunk == 0 || self.growth < 2 || self.max_n < 2 {
            return Err(McError::InvalidRule(
                "chunk must be positive, growth at least 2, max_n at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Whether `value` lies in the plausible range, widened by
    /// `max(0.05, 3·stderr)` on both sides.
    pub fn is_plausible(&self, value: f64, stderr: f64) -> bool {
        let margin = (3.0 * stderr).max(0.05);
        value >= self.plausible.0 - margin && value <= self.plausible.1 + margin
    }

    fn converged(&self, value: f64, stderr: f64, n: u64) -> bool {
        n >= self.min_n
            && self.is_plausible(value, stderr)
            && stderr < self.rel_err * value.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    RampFailed,
    CapReached,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::RampFailed => "ramp-failed",
            Status::CapReached => "cap-reached",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Coefficients of the integrand span more than ten orders of magnitude.
    ScaleDisparity { span: f64 },
    /// Too many samples hit a vanishing denominator.
    SingularRate { fraction: f64 },
    /// The Jacobian numerator vanished at every probe point.
    DegenerateJacobian,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ScaleDisparity { span } => write!(
                f,
                "scale disparity: integrand coefficients span {span:.1e}; \
                 the estimate may need far more samples than the cap, consider rescaling"
            ),
            Warning::SingularRate { fraction } => write!(
                f,
                "{fraction:.2e} of samples hit a vanishing denominator; \
                 the denominators may vanish on a set of positive measure"
            ),
            Warning::DegenerateJacobian => write!(
                f,
                "the Jacobian determinant vanished at every probe point; \
                 the linear-parameter choice may not satisfy the formula's hypotheses"
            ),
        }
    }
}

/// Result of one integration run.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Number of integrand evaluations.
    pub n: u64,
    pub status: Status,
    /// Evaluations that hit a vanishing denominator.
    pub singular: u64,
    pub warnings: Vec<Warning>,
}

impl Estimate {
    pub fn rel_err(&self) -> f64 {
        self.stderr / self.value.abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub workers: usize,
    pub antithetic: bool,
    /// Distinguishes independent runs sharing a seed (e.g. one per box).
    pub stream_key: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            antithetic: false,
            stream_key: 0,
        }
    }
}

const SINGULAR_WARN_FRACTION: f64 = 1e-6;

/// Per-block sampling state. Samples are numbered globally so the branch
/// schedule does not depend on how blocks are split across workers.
struct BlockRun<'a> {
    spec: &'a IntegrandSpec,
    antithetic: bool,
    rng: RngStream,
    next_index: u64,
    acc: Accumulator,
    singular: u64,
    u: Vec<f64>,
    u_anti: Vec<f64>,
    kbar: Vec<f64>,
    kbar_anti: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> BlockRun<'a> {
    fn new(spec: &'a IntegrandSpec, opts: &RunOptions, block: u64, first_index: u64) -> Self {
        let n = spec.n();
        let r = spec.rho_rest.len();
        Self {
            spec,
            antithetic: opts.antithetic,
            rng: RngStream::new(opts.seed, mix_keys(opts.stream_key, block)),
            next_index: first_index,
            acc: Accumulator::new(),
            singular: 0,
            u: vec![0.0; n],
            u_anti: vec![0.0; n],
            kbar: vec![0.0; r],
            kbar_anti: vec![0.0; r],
            scratch: vec![0.0; spec.scratch_len()],
        }
    }

    fn run(&mut self, samples: u64) {
        let branches = self.spec.plan.branch_count() as u64;
        let bf = branches as f64;
        for _ in 0..samples {
            let branch = (self.next_index % branches) as usize;
            self.next_index += 1;
            for x in self.u.iter_mut() {
                *x = self.rng.next_open01();
            }
            for (x, d) in self.kbar.iter_mut().zip(&self.spec.rho_rest) {
                *x = d.sample(&mut self.rng);
            }
            let s = self.spec.evaluate(&self.u, &self.kbar, branch, &mut self.scratch);
            self.singular += s.singular as u64;
            let mut q = s.value;
            if self.antithetic {
                for (a, &x) in self.u_anti.iter_mut().zip(&self.u) {
                    *a = 1.0 - x;
                }
                for ((a, &x), d) in self.kbar_anti.iter_mut().zip(&self.kbar).zip(&self.spec.rho_rest) {
                    let (lo, hi) = d.bounds();
                    *a = lo + hi - x;
                }
                let s2 = self
                    .spec
                    .evaluate(&self.u_anti, &self.kbar_anti, branch, &mut self.scratch);
                self.singular += s2.singular as u64;
                q = 0.5 * (q + s2.value);
            }
            self.acc.push_finite(q * bf);
        }
    }
}

/// Estimate the integral of the Kac-Rice integrand over `spec`'s box.
///
/// Samples are drawn in blocks of `rule.chunk`; block `b` draws from stream
/// `(seed, mix(stream_key, b))`, and blocks are merged in index order, so
/// the result depends on the seed but not on the number of workers.
pub fn run_integration(
    spec: &IntegrandSpec,
    rule: &StoppingRule,
    opts: &RunOptions,
) -> Result<Estimate, McError> {
    rule.validate()?;
    if opts.antithetic {
        if let Some(axis) = spec.rho_rest.iter().position(|d| !d.is_symmetric()) {
            return Err(McError::Sampling(
                crate::sampling::SamplingError::AsymmetricDistribution { axis },
            ));
        }
    }
    let per_sample: u64 = if opts.antithetic { 2 } else { 1 };
    let max_samples = (rule.max_n / per_sample).max(2);
    let workers = opts.workers.max(1);

    let mut total = Accumulator::new();
    let mut singular = 0u64;
    let mut ever_plausible = false;
    let mut status = None;

    // Ramp inside the first block at checkpoints 10, 100, ...
    let first_len = rule.chunk.min(max_samples);
    let mut block0 = BlockRun::new(spec, opts, 0, 0);
    let mut checkpoint = 10u64.min(first_len);
    let mut done = 0u64;
    loop {
        block0.run(checkpoint - done);
        done = checkpoint;
        if let Ok((v, e)) = block0.acc.estimate() {
            ever_plausible |= rule.is_plausible(v, e);
            if rule.converged(v, e, done * per_sample) {
                status = Some(Status::Converged);
                break;
            }
        }
        if done == first_len {
            break;
        }
        checkpoint = (checkpoint.saturating_mul(rule.growth)).min(first_len);
    }
    total = total.merge(&block0.acc);
    singular += block0.singular;
    drop(block0);

    let mut next_block = 1u64;
    while status.is_none() && total.count() < max_samples {
        let remaining = max_samples - total.count();
        let blocks_left = remaining.div_ceil(rule.chunk);
        let batch = (workers as u64).min(blocks_left);
        let results: Vec<(Accumulator, u64)> = if batch == 1 {
            let len = rule.chunk.min(remaining);
            let mut b = BlockRun::new(spec, opts, next_block, next_block * rule.chunk);
            b.run(len);
            vec![(b.acc, b.singular)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..batch)
                    .map(|k| {
                        let block = next_block + k;
                        let start_in_run = total.count() + k * rule.chunk;
                        let len = rule.chunk.min(max_samples - start_in_run);
                        s.spawn(move || {
                            let mut b = BlockRun::new(spec, opts, block, block * rule.chunk);
                            b.run(len);
                            (b.acc, b.singular)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        for (acc, sing) in results {
            next_block += 1;
            total = total.merge(&acc);
            singular += sing;
            let (v, e) = total.estimate()?;
            ever_plausible |= rule.is_plausible(v, e);
            if rule.converged(v, e, total.count() * per_sample) {
                status = Some(Status::Converged);
                break;
            }
        }
    }

    let (value, stderr) = total.estimate()?;
    let status = status.unwrap_or(if ever_plausible {
        Status::CapReached
    } else {
        Status::RampFailed
    });
    let n = total.count() * per_sample;
    let mut warnings = Vec::new();
    if status == Status::RampFailed && spec.coefficient_span() > SCALE_DISPARITY_LIMIT {
        warnings.push(Warning::ScaleDisparity {
            span: spec.coefficient_span(),
        });
    }
    let fraction = singular as f64 / n as f64;
    if fraction > SINGULAR_WARN_FRACTION {
        warnings.push(Warning::SingularRate { fraction });
    }
    if spec.degenerate_jacobian() {
        warnings.push(Warning::DegenerateJacobian);
    }
    Ok(Estimate {
        value,
        stderr,
        n,
        status,
        singular,
        warnings,
    })
}
