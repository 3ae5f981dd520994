//! Partitioning a parameter box by expected solution count, and searching
//! for a sub-box where the count is maximal.

mod export;
mod partition;
mod search;

use std::fmt;

use thiserror::Error;

use crate::mc::{run_integration, Estimate, IntegrandSpec, McError, RunOptions, Status, StoppingRule};
use crate::polysys::Interval;
use crate::sampling::mix_keys;

pub use export::{export_csv, export_ppm, CSV_HEADER};
pub use partition::{bisect_partition, grid_partition, Partition};
pub use search::{format_trace, search_max, SearchMode, SearchOutcome, SearchStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid precision: {0}")]
    InvalidPrecision(String),
    #[error("boxes vary along more than the two chosen axes")]
    AxisMismatch,
    #[error("invalid bounds: need M_min <= M_max and a positive tolerance")]
    InvalidBounds,
    #[error(transparent)]
    Mc(#[from] McError),
}

/// Product of closed bounded intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBox {
    sides: Vec<Interval>,
}

impl ParamBox {
    pub fn new(sides: Vec<Interval>) -> Result<Self, RegionError> {
        if sides.is_empty() {
            return Err(RegionError::InvalidBox("no sides".into()));
        }
        for (i, s) in sides.iter().enumerate() {
            if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
                return Err(RegionError::InvalidBox(format!("side {} is {s}", i + 1)));
            }
        }
        Ok(Self { sides })
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    /// Lower and upper halves along `axis`.
    pub fn bisect(&self, axis: usize) -> (ParamBox, ParamBox) {
        let s = self.sides[axis];
        let mid = s.lo + (s.hi - s.lo) / 2.0;
        let mut lo = self.clone();
        let mut hi = self.clone();
        lo.sides[axis].hi = mid;
        hi.sides[axis].lo = mid;
        (lo, hi)
    }

    /// Equal cells, the last axis varying fastest.
    pub fn grid(&self, counts: &[usize]) -> Result<Vec<ParamBox>, RegionError> {
        if counts.len() != self.dim() || counts.contains(&0) {
            return Err(RegionError::InvalidBox("grid counts must be positive, one per axis".into()));
        }
        let mut cells = vec![Vec::new()];
        for (s, &c) in self.sides.iter().zip(counts) {
            let w = (s.hi - s.lo) / c as f64;
            let pieces: Vec<Interval> = (0..c)
                .map(|i| {
                    let lo = if i == 0 { s.lo } else { s.lo + w * i as f64 };
                    let hi = if i + 1 == c { s.hi } else { s.lo + w * (i + 1) as f64 };
                    Interval::new(lo, hi)
                })
                .collect();
            cells = cells
                .into_iter()
                .flat_map(|prefix: Vec<Interval>| {
                    pieces.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.push(*p);
                        v
                    })
                })
                .collect();
        }
        Ok(cells.into_iter().map(|sides| ParamBox { sides }).collect())
    }

    /// Stream key derived from the bounds, so a box gets the same random
    /// numbers wherever it appears.
    pub fn key(&self) -> u64 {
        self.sides
            .iter()
            .fold(0x6b61_6372_6963_6500, |h, s| mix_keys(mix_keys(h, s.lo.to_bits()), s.hi.to_bits()))
    }
}

impl fmt::Display for ParamBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "[{},{}]", s.lo, s.hi)?;
        }
        Ok(())
    }
}

/// Bisection depth limits per axis.
#[derive(Clone, Debug, PartialEq)]
pub enum PrecisionSpec {
    /// Smallest side lengths; depth `ceil(log2(len/δ))`.
    Delta(Vec<f64>),
    /// Explicit maximal number of bisections per axis.
    Depth(Vec<u32>),
}

impl PrecisionSpec {
    pub fn levels(&self, bx: &ParamBox) -> Result<Vec<u32>, RegionError> {
        match self {
            PrecisionSpec::Delta(d) => {
                if d.len() != bx.dim() {
                    return Err(RegionError::InvalidPrecision(format!(
                        "{} deltas for {} parameters",
                        d.len(),
                        bx.dim()
                    )));
                }
                d.iter()
                    .zip(bx.sides())
                    .map(|(&delta, s)| {
                        if !(delta > 0.0 && delta.is_finite()) {
                            return Err(RegionError::InvalidPrecision(format!("delta {delta} must be positive")));
                        }
                        Ok((s.len() / delta).log2().ceil().max(0.0) as u32)
                    })
                    .collect()
            }
            PrecisionSpec::Depth(l) => {
                if l.len() != bx.dim() {
                    return Err(RegionError::InvalidPrecision(format!(
                        "{} depths for {} parameters",
                        l.len(),
                        bx.dim()
                    )));
                }
                Ok(l.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassMode {
    General,
    /// Reaction networks: one solution is the monostationary floor.
    Crn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxClass {
    AllMin,
    AllMax,
    Mixed,
    /// The integration itself failed.
    Failed,
}

impl fmt::Display for BoxClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxClass::AllMin => "all-min",
            BoxClass::AllMax => "all-max",
            BoxClass::Mixed => "mixed",
            BoxClass::Failed => "failed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub class: BoxClass,
    /// More than one solution on average (reaction-network mode only).
    pub multistat: bool,
}

pub const DEFAULT_TOL: f64 = 0.05;

/// Classify an estimate against the count bounds. A box is `AllMax` when
/// `r̂ + 3ê ≥ M_max − tol` and `r̂ − 3ê ≥ M_max − 3·tol`, and `AllMin`
/// symmetrically around the floor (`M_min`, or 1 in reaction-network mode).
pub fn classify(r: f64, e: f64, m_min: f64, m_max: f64, mode: ClassMode, tol: f64) -> Classification {
    let floor = match mode {
        ClassMode::General => m_min,
        ClassMode::Crn => 1.0,
    };
    let class = if r + 3.0 * e >= m_max - tol && r - 3.0 * e >= m_max - 3.0 * tol {
        BoxClass::AllMax
    } else if r - 3.0 * e <= floor + tol && r + 3.0 * e <= floor + 3.0 * tol {
        BoxClass::AllMin
    } else {
        BoxClass::Mixed
    };
    Classification {
        class,
        multistat: mode == ClassMode::Crn && r > 1.0 + tol,
    }
}

/// Settings shared by every box in a partition or search.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionConfig {
    pub rule: StoppingRule,
    pub opts: RunOptions,
    pub m_min: f64,
    pub m_max: f64,
    pub mode: ClassMode,
    pub tol: f64,
    /// Cap on evaluations per box.
    pub box_max_n: u64,
}

impl RegionConfig {
    pub fn new(m_min: f64, m_max: f64) -> Self {
        Self {
            rule: StoppingRule::default(),
            opts: RunOptions::default(),
            m_min,
            m_max,
            mode: ClassMode::General,
            tol: DEFAULT_TOL,
            box_max_n: 1_000_000_000,
        }
    }

    fn validate(&self) -> Result<(), RegionError> {
        if !(self.m_min <= self.m_max && self.tol > 0.0) {
            return Err(RegionError::InvalidBounds);
        }
        self.rule.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxReport {
    pub bx: ParamBox,
    pub est: Result<Estimate, McError>,
    pub class: BoxClass,
    pub multistat: bool,
    /// Bisections applied along each axis to reach this box.
    pub depth: Vec<u32>,
}

impl BoxReport {
    pub fn r_hat(&self) -> Option<f64> {
        self.est.as_ref().ok().map(|e| e.value)
    }

    /// Whether the per-box evaluation cap stopped the integration.
    pub fn capped(&self) -> bool {
        matches!(&self.est, Ok(e) if e.status != Status::Converged)
    }
}

/// Integrate over one box and classify the result.
pub fn evaluate_box(spec: &IntegrandSpec, sys: &crate::polysys::ParametrizedSystem, bx: &ParamBox, depth: Vec<u32>, cfg: &RegionConfig) -> BoxReport {
    let est = spec.restricted(sys, bx.sides()).and_then(|s| {
        let rule = StoppingRule {
            plausible: (cfg.m_min, cfg.m_max),
            max_n: cfg.rule.max_n.min(cfg.box_max_n),
            ..cfg.rule.clone()
        };
        let opts = RunOptions {
            stream_key: mix_keys(cfg.opts.stream_key, bx.key()),
            ..cfg.opts.clone()
        };
        run_integration(&s, &rule, &opts)
    });
    let c = match &est {
        Ok(e) => classify(e.value, e.stderr, cfg.m_min, cfg.m_max, cfg.mode, cfg.tol),
        Err(_) => Classification {
            class: BoxClass::Failed,
            multistat: false,
        },
    };
    BoxReport {
        bx: bx.clone(),
        est,
        class: c.class,
        multistat: c.multistat,
        depth,
    }
}
