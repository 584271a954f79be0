//! Placement of short jobs around a fixed skeleton of long jobs.

pub mod config_lp;
pub mod grouping;
pub mod integral;
pub mod windows;

use crate::lp::LpError;
use crate::model::{Job, JobId};
use crate::rational::{inverse_integer, uint, Rational};
use config_lp::{solve_config_lp, BoxSpec, SmallType};
use grouping::{bound_grouping_overflow, geometric_group};
use integral::{place_integral, Block, BlockFill};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use windows::{reduce_windows, to_window_solution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmallError {
    #[error("short jobs do not fit the residual capacity")]
    Infeasible,
    #[error("column generation did not converge")]
    IterationLimit,
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
}

/// A maximal run of layers with constant skeleton usage and no skeleton job starting or
/// ending strictly inside.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub first_layer: u64,
    pub layers: u64,
    pub machines_free: u64,
    pub resource_free: u64,
    /// No skeleton job runs here or later.
    pub trailing: bool,
}

/// Splits `[0, usage.len())` into segments, breaking wherever usage changes and at every
/// layer index in `breaks`.
pub fn segments(usage: &[(u64, u64)], breaks: &BTreeSet<u64>, m: u64, resource: u64) -> Vec<Segment> {
    let last_busy = usage.iter().rposition(|&(mm, rr)| mm > 0 || rr > 0).map(|i| i as u64 + 1).unwrap_or(0);
    let mut out: Vec<Segment> = Vec::new();
    for (l, &(mm, rr)) in usage.iter().enumerate() {
        let l = l as u64;
        let trailing = l >= last_busy;
        let extend = match out.last() {
            Some(s) => {
                s.machines_free == m - mm
                    && s.resource_free == resource - rr
                    && s.trailing == trailing
                    && !breaks.contains(&l)
            }
            None => false,
        };
        if extend {
            out.last_mut().expect("checked").layers += 1;
        } else {
            out.push(Segment { first_layer: l, layers: 1, machines_free: m - mm, resource_free: resource - rr, trailing });
        }
    }
    out
}

/// Inputs for [`place_small`].
pub struct SmallInput<'a> {
    pub m: u64,
    pub resource: u64,
    pub eps: &'a Rational,
    /// Layer length.
    pub step: &'a Rational,
    pub segments: &'a [Segment],
    /// Length of the extra box with full capacity.
    pub extra_len: &'a Rational,
    pub jobs: &'a [Job],
    /// All jobs of the instance, for the grouping bound.
    pub all_jobs: &'a [Job],
}

/// Counters and bounds recorded while placing short jobs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallStats {
    pub types: usize,
    pub wide_types: usize,
    pub narrow_types: usize,
    pub boxes: usize,
    pub columns: usize,
    pub iterations: usize,
    pub support_before: usize,
    pub support_after: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub time_before: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub time_after: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub overflow: Rational,
    pub pieces: usize,
    pub deferred: usize,
}

/// Short-job placement relative to segment starts, the extra box, the end window and a
/// list of deferred jobs for the caller to append.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SmallPlan {
    /// One fill per input segment.
    pub segments: Vec<BlockFill>,
    pub extra: BlockFill,
    pub end: BlockFill,
    pub deferred: Vec<JobId>,
    pub stats: SmallStats,
}

/// Rounded types of the short jobs and the type of each job.
pub fn small_types(jobs: &[Job], eps: &Rational, m: u64, resource: u64) -> (Vec<SmallType>, BTreeMap<JobId, usize>) {
    let groups = geometric_group(jobs, eps, m, resource);
    let mut by_r: BTreeMap<std::cmp::Reverse<u64>, (Rational, Vec<JobId>)> = BTreeMap::new();
    for g in groups.groups.values() {
        let e = by_r.entry(std::cmp::Reverse(g.rounded_r)).or_insert_with(|| (Rational::zero(), Vec::new()));
        e.0 += &g.total_p;
        e.1.extend(g.members.iter().copied());
    }
    let wide_from = eps * uint(resource);
    let mut types = Vec::new();
    let mut job_type = BTreeMap::new();
    for (i, (std::cmp::Reverse(r), (p, members))) in by_r.into_iter().enumerate() {
        types.push(SmallType { r, p, wide: uint(r) >= wide_from });
        for id in members {
            job_type.insert(id, i);
        }
    }
    (types, job_type)
}

/// Bound on the support of the reduced window solution: `2 / (eps^3 delta)` plus the
/// number of narrow types.
pub fn window_support_bound(eps: &Rational, delta: &Rational, narrow_types: usize) -> Rational {
    uint(2) / (eps * eps * eps * delta) + uint(narrow_types as u64)
}

/// Places the short jobs or reports that they do not fit.
pub fn place_small(input: &SmallInput<'_>) -> Result<SmallPlan, SmallError> {
    let SmallInput { m, resource, eps, step, segments, extra_len, jobs, all_jobs } = *input;
    let mut plan = SmallPlan {
        segments: vec![BlockFill::default(); segments.len()],
        ..SmallPlan::default()
    };
    if jobs.is_empty() {
        return Ok(plan);
    }
    inverse_integer(eps).expect("1/eps is an integer");
    let groups = geometric_group(jobs, eps, m, resource);
    plan.stats.overflow = bound_grouping_overflow(&groups, eps, all_jobs, m, resource);
    let (types, job_type) = small_types(jobs, eps, m, resource);
    plan.stats.types = types.len();
    plan.stats.wide_types = types.iter().filter(|t| t.wide).count();
    plan.stats.narrow_types = types.len() - plan.stats.wide_types;

    let stretch = Rational::one() + eps;
    let mut box_of: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut boxes: Vec<BoxSpec> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    for s in segments {
        let len = uint(s.layers) * step;
        let box_index = (s.machines_free > 0).then(|| {
            let b = *box_of.entry((s.machines_free, s.resource_free)).or_insert_with(|| {
                boxes.push(BoxSpec {
                    machines: s.machines_free,
                    resource: s.resource_free,
                    cap: Rational::zero(),
                    weight: Rational::one(),
                });
                boxes.len() - 1
            });
            boxes[b].cap += &stretch * &len;
            b
        });
        blocks.push(Block { box_index, machines: s.machines_free, resource: s.resource_free, capacity: &stretch * &len });
    }
    let extra_cap = &stretch * extra_len;
    boxes.push(BoxSpec { machines: m, resource, cap: extra_cap.clone(), weight: uint(2) });
    blocks.push(Block { box_index: Some(boxes.len() - 1), machines: m, resource, capacity: extra_cap });
    plan.stats.boxes = boxes.len();

    let config = solve_config_lp(&types, &boxes)?;
    plan.stats.columns = config.columns;
    plan.stats.iterations = config.iterations;
    let folded = to_window_solution(&types, &boxes, &config);
    let (reduced, report) = reduce_windows(&types, &boxes, &folded, eps, m, resource)?;
    plan.stats.support_before = report.support_before;
    plan.stats.support_after = report.support_after;
    plan.stats.time_before = report.time_before;
    plan.stats.time_after = report.time_after;

    let placed = place_integral(&types, &reduced, &blocks, jobs, &job_type, m, resource);
    plan.stats.pieces = placed.blocks.iter().map(|b| b.pieces.len()).sum();
    let mut fills = placed.blocks;
    plan.extra = fills.pop().expect("extra block");
    plan.segments = fills;
    plan.end = placed.end;
    plan.deferred = placed.deferred;
    plan.stats.deferred = plan.deferred.len();
    Ok(plan)
}
