use std::collections::VecDeque;
use std::fmt::Write;

use super::partition::{check_dim, next_axis};
use super::{evaluate_box, BoxClass, BoxReport, ClassMode, ParamBox, PrecisionSpec, RegionConfig, RegionError};
use crate::mc::IntegrandSpec;
use crate::polysys::ParametrizedSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Keep only the half with the larger estimate.
    Greedy,
    /// Keep every half whose estimate exceeds the floor.
    KeepBoth,
}

/// One round of the search: the boxes estimated and which one is pursued.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchStep {
    pub iteration: usize,
    pub candidates: Vec<BoxReport>,
    /// Indices into `candidates` that are bisected further or returned.
    pub kept: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub trace: Vec<SearchStep>,
    /// First all-max box found, else the best box seen.
    pub best: Option<BoxReport>,
    /// Whether `best` was classified all-max.
    pub found: bool,
    pub integrals: usize,
}

fn better(a: &BoxReport, b: &BoxReport) -> bool {
    a.r_hat().unwrap_or(f64::NEG_INFINITY) > b.r_hat().unwrap_or(f64::NEG_INFINITY)
}

/// Bisect toward a box attaining the maximal count.
pub fn search_max(
    sys: &ParametrizedSystem,
    spec: &IntegrandSpec,
    bx: &ParamBox,
    prec: &PrecisionSpec,
    cfg: &RegionConfig,
    mode: SearchMode,
) -> Result<SearchOutcome, RegionError> {
    cfg.validate()?;
    check_dim(sys, bx)?;
    let levels = prec.levels(bx)?;
    let floor = match cfg.mode {
        ClassMode::General => cfg.m_min,
        ClassMode::Crn => 1.0,
    };

    let root = evaluate_box(spec, sys, bx, vec![0; bx.dim()], cfg);
    let mut integrals = 1;
    let mut best = root.clone();
    let mut trace = vec![SearchStep {
        iteration: 0,
        candidates: vec![root.clone()],
        kept: vec![0],
    }];
    if root.class == BoxClass::AllMax {
        return Ok(SearchOutcome {
            trace,
            best: Some(root),
            found: true,
            integrals,
        });
    }

    let mut frontier = VecDeque::from([(root, 0usize)]);
    let mut iteration = 0;
    while !frontier.is_empty() {
        iteration += 1;
        let mut candidates = Vec::new();
        let mut next = VecDeque::new();
        while let Some((report, cursor)) = frontier.pop_front() {
            let Some(axis) = next_axis(&report.depth, &levels, cursor) else {
                continue;
            };
            let (lo, hi) = report.bx.bisect(axis);
            let mut depth = report.depth.clone();
            depth[axis] += 1;
            let a = evaluate_box(spec, sys, &lo, depth.clone(), cfg);
            let b = evaluate_box(spec, sys, &hi, depth, cfg);
            integrals += 2;
            candidates.push((a, axis + 1));
            candidates.push((b, axis + 1));
            if mode == SearchMode::Greedy {
                break;
            }
        }
        if candidates.is_empty() {
            break;
        }
        let mut kept = Vec::new();
        match mode {
            SearchMode::Greedy => {
                let pick = if better(&candidates[1].0, &candidates[0].0) { 1 } else { 0 };
                kept.push(pick);
            }
            SearchMode::KeepBoth => {
                for (i, (c, _)) in candidates.iter().enumerate() {
                    if c.r_hat().is_some_and(|r| r > floor + cfg.tol) {
                        kept.push(i);
                    }
                }
            }
        }
        for (c, _) in &candidates {
            if better(c, &best) {
                best = c.clone();
            }
        }
        let hit = kept.iter().copied().find(|&i| candidates[i].0.class == BoxClass::AllMax);
        let step_reports: Vec<BoxReport> = candidates.iter().map(|(c, _)| c.clone()).collect();
        if let Some(i) = hit {
            let found = step_reports[i].clone();
            trace.push(SearchStep {
                iteration,
                candidates: step_reports,
                kept: vec![i],
            });
            return Ok(SearchOutcome {
                trace,
                best: Some(found),
                found: true,
                integrals,
            });
        }
        for &i in &kept {
            next.push_back(candidates[i].clone());
        }
        trace.push(SearchStep {
            iteration,
            candidates: step_reports,
            kept,
        });
        frontier = next;
    }
    Ok(SearchOutcome {
        trace,
        best: Some(best),
        found: false,
        integrals,
    })
}

/// Table of the search: iteration, box, estimate, and a mark on kept boxes.
pub fn format_trace(outcome: &SearchOutcome) -> String {
    let mut out = String::from("iteration\tbox\tr_hat\tstderr\tkept\n");
    for step in &outcome.trace {
        for (i, c) in step.candidates.iter().enumerate() {
            let (r, e) = match &c.est {
                Ok(est) => (format!("{:.4}", est.value), format!("{:.4}", est.stderr)),
                Err(err) => (format!("error: {err}"), String::new()),
            };
            let mark = if step.kept.contains(&i) { "*" } else { "" };
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", step.iteration, c.bx, r, e, mark);
        }
    }
    out
}
