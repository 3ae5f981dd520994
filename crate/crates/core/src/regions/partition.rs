use std::collections::VecDeque;

use super::{evaluate_box, BoxClass, BoxReport, ParamBox, PrecisionSpec, RegionConfig, RegionError};
use crate::mc::IntegrandSpec;
use crate::polysys::ParametrizedSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub reports: Vec<BoxReport>,
    /// Integrals computed, including those of boxes later bisected.
    pub integrals: usize,
}

/// Integrate every cell of an equal grid; cells are in row-major order.
pub fn grid_partition(
    sys: &ParametrizedSystem,
    spec: &IntegrandSpec,
    bx: &ParamBox,
    counts: &[usize],
    cfg: &RegionConfig,
) -> Result<Partition, RegionError> {
    cfg.validate()?;
    check_dim(sys, bx)?;
    let reports: Vec<BoxReport> = bx
        .grid(counts)?
        .iter()
        .map(|cell| evaluate_box(spec, sys, cell, vec![0; bx.dim()], cfg))
        .collect();
    Ok(Partition {
        integrals: reports.len(),
        reports,
    })
}

/// Next axis to bisect, cycling from `from` and skipping exhausted axes.
pub(super) fn next_axis(depth: &[u32], levels: &[u32], from: usize) -> Option<usize> {
    let m = depth.len();
    (0..m).map(|k| (from + k) % m).find(|&a| depth[a] < levels[a])
}

/// Breadth-first bisection: boxes classified all-min or all-max are kept,
/// mixed boxes are halved along the next axis in turn until every axis
/// reaches its depth limit.
pub fn bisect_partition(
    sys: &ParametrizedSystem,
    spec: &IntegrandSpec,
    bx: &ParamBox,
    prec: &PrecisionSpec,
    cfg: &RegionConfig,
) -> Result<Partition, RegionError> {
    cfg.validate()?;
    check_dim(sys, bx)?;
    let levels = prec.levels(bx)?;
    let mut queue = VecDeque::from([(bx.clone(), vec![0u32; bx.dim()], 0usize)]);
    let mut reports = Vec::new();
    let mut integrals = 0;
    while let Some((cur, depth, cursor)) = queue.pop_front() {
        let report = evaluate_box(spec, sys, &cur, depth.clone(), cfg);
        integrals += 1;
        if report.class != BoxClass::Mixed {
            reports.push(report);
            continue;
        }
        match next_axis(&depth, &levels, cursor) {
            None => reports.push(report),
            Some(axis) => {
                let (lo, hi) = cur.bisect(axis);
                let mut d = depth;
                d[axis] += 1;
                queue.push_back((lo, d.clone(), axis + 1));
                queue.push_back((hi, d, axis + 1));
            }
        }
    }
    Ok(Partition { reports, integrals })
}

pub(super) fn check_dim(sys: &ParametrizedSystem, bx: &ParamBox) -> Result<(), RegionError> {
    if bx.dim() != sys.m() {
        return Err(RegionError::InvalidBox(format!(
            "box has {} sides, system has {} parameters",
            bx.dim(),
            sys.m()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_cycling_skips_exhausted() {
        assert_eq!(next_axis(&[0, 0, 0], &[1, 1, 1], 0), Some(0));
        assert_eq!(next_axis(&[1, 0, 0], &[1, 1, 1], 1), Some(1));
        assert_eq!(next_axis(&[1, 0, 1], &[1, 0, 2], 1), Some(2));
        assert_eq!(next_axis(&[1, 1], &[1, 1], 0), None);
        assert_eq!(next_axis(&[0, 3], &[2, 3], 1), Some(0));
    }
}
