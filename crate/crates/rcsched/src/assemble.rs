//! Turns a long-job skeleton and a short-job plan into one schedule, block by block, and
//! records the block boundaries for certification.

use crate::baseline::{greedy_bound_jobs, list_schedule_jobs};
use crate::large::{layer_usage, GridJob};
use crate::model::{Instance, Job, JobId, Schedule};
use crate::rational::{int, uint, Rational};
use crate::skyline::Skyline;
use crate::small::{segments, place_small, Segment, SmallError, SmallInput, SmallPlan};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Long jobs fixed on the layer grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub count: u64,
    pub jobs: Vec<GridJob>,
    pub starts: BTreeMap<JobId, u64>,
}

impl Skeleton {
    pub fn usage(&self) -> Vec<(u64, u64)> {
        layer_usage(&self.jobs, &self.starts, self.count)
    }

    /// Layer indices where some skeleton job starts or ends.
    pub fn breaks(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for j in &self.jobs {
            if let Some(&s) = self.starts.get(&j.id) {
                out.insert(s);
                out.insert(s + j.len);
            }
        }
        out
    }

    /// True when every layer respects both capacities.
    pub fn within(&self, m: u64, resource: u64) -> bool {
        self.jobs.iter().all(|j| self.starts.get(&j.id).map(|&s| s + j.len <= self.count).unwrap_or(true))
            && self.usage().iter().all(|&(mm, rr)| mm <= m && rr <= resource)
    }
}

/// Short jobs planned around a skeleton.
#[derive(Clone, Debug)]
pub struct Filled {
    pub segments: Vec<Segment>,
    pub plan: SmallPlan,
}

/// Common data for filling skeletons at one horizon.
pub struct FillContext<'a> {
    pub inst: &'a Instance,
    pub eps: &'a Rational,
    pub t: &'a Rational,
    pub step: &'a Rational,
    pub small: &'a [Job],
}

impl FillContext<'_> {
    /// Places the short jobs into the residual capacity of `sk`.
    pub fn fill(&self, sk: &Skeleton) -> Result<Filled, SmallError> {
        let segs = segments(&sk.usage(), &sk.breaks(), self.inst.m, self.inst.resource);
        let extra = int(3) * self.eps * self.t;
        let plan = place_small(&SmallInput {
            m: self.inst.m,
            resource: self.inst.resource,
            eps: self.eps,
            step: self.step,
            segments: &segs,
            extra_len: &extra,
            jobs: self.small,
            all_jobs: &self.inst.jobs,
        })?;
        Ok(Filled { segments: segs, plan })
    }
}

/// One contiguous block of the assembled schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub label: String,
    #[serde(with = "crate::rational::serde_q")]
    pub start: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub end: Rational,
    /// Upper bound on `end - start`.
    #[serde(with = "crate::rational::serde_q")]
    pub bound: Rational,
    pub jobs: Vec<JobId>,
}

impl Part {
    pub fn length(&self) -> Rational {
        &self.end - &self.start
    }
}

/// Jobs appended after the skeleton region.
pub struct Extras<'a> {
    /// Removed long jobs that all start together, with the bound on their block.
    pub top: &'a [JobId],
    pub top_bound: Rational,
    pub medium: &'a BTreeSet<JobId>,
}

/// Uncompacted schedule and its blocks.
#[derive(Clone, Debug)]
pub struct Layout {
    pub schedule: Schedule,
    pub parts: Vec<Part>,
}

fn jobs_of(inst: &Instance, ids: &[JobId]) -> Vec<Job> {
    let map = inst.job_map();
    ids.iter().map(|id| map[id].clone()).collect()
}

/// Lays out the stretched layers, the extra box, the end window, the removed long jobs, the
/// deferred short jobs and the medium jobs one after another.
pub fn assemble(fc: &FillContext<'_>, sk: &Skeleton, filled: &Filled, extras: &Extras<'_>) -> Layout {
    let inst = fc.inst;
    let (m, resource) = (inst.m, inst.resource);
    let plan = &filled.plan;
    let mut sched = Schedule::new();
    let mut parts = Vec::new();

    // stretched layers
    let mut offset = Rational::zero();
    let mut seg_start = Vec::with_capacity(filled.segments.len());
    let mut layer_jobs = Vec::new();
    for (seg, fill) in filled.segments.iter().zip(&plan.segments) {
        seg_start.push(offset.clone());
        for (id, rel) in &fill.starts {
            sched.insert(*id, &offset + rel);
            layer_jobs.push(*id);
        }
        let nominal = uint(seg.layers) * fc.step;
        offset += if seg.trailing { fill.used.clone() } else { nominal.max(fill.used.clone()) };
    }
    for j in &sk.jobs {
        let s = sk.starts[&j.id];
        let k = filled.segments.partition_point(|g| g.first_layer <= s) - 1;
        let g = &filled.segments[k];
        sched.insert(j.id, &seg_start[k] + uint(s - g.first_layer) * fc.step);
        layer_jobs.push(j.id);
    }
    layer_jobs.sort_unstable();
    let stretch = Rational::from_integer(1.into()) + fc.eps;
    parts.push(Part {
        label: "layers".into(),
        start: Rational::zero(),
        end: offset.clone(),
        bound: &stretch * uint(sk.count) * fc.step,
        jobs: layer_jobs,
    });

    let mut push_fill = |label: &str, fill: &crate::small::integral::BlockFill, bound: Rational, offset: &mut Rational| {
        for (id, rel) in &fill.starts {
            sched.insert(*id, &*offset + rel);
        }
        let start = offset.clone();
        *offset += &fill.used;
        parts.push(Part { label: label.into(), start, end: offset.clone(), bound, jobs: fill.starts.keys().copied().collect() });
    };
    push_fill("extra", &plan.extra, &stretch * int(3) * fc.eps * fc.t, &mut offset);
    let end_jobs = jobs_of(inst, &plan.end.starts.keys().copied().collect::<Vec<_>>());
    push_fill("end", &plan.end, greedy_bound_jobs(&end_jobs, m, resource), &mut offset);

    let block = |label: &str, ids: Vec<JobId>, inner: Schedule, bound: Rational, sched: &mut Schedule, offset: &mut Rational| {
        let jobs = jobs_of(inst, &ids);
        let len = inner.span_of(&jobs);
        sched.absorb(&inner, offset);
        let start = offset.clone();
        *offset += len;
        Part { label: label.into(), start, end: offset.clone(), bound, jobs: ids }
    };

    let top = jobs_of(inst, extras.top);
    let together = top.len() as u64 <= m && top.iter().map(|j| j.r).sum::<u64>() <= resource;
    let top_inner = if together {
        let mut s = Schedule::new();
        for j in &top {
            s.insert(j.id, Rational::zero());
        }
        s
    } else {
        list_schedule_jobs(&top, m, resource)
    };
    let mut top_ids = extras.top.to_vec();
    top_ids.sort_unstable();
    parts.push(block("top", top_ids, top_inner, extras.top_bound.clone(), &mut sched, &mut offset));

    let deferred = jobs_of(inst, &plan.deferred);
    let tail_bound = greedy_bound_jobs(&deferred, m, resource);
    parts.push(block("tail", plan.deferred.clone(), list_schedule_jobs(&deferred, m, resource), tail_bound, &mut sched, &mut offset));

    let medium_ids: Vec<JobId> = extras.medium.iter().copied().collect();
    let medium = jobs_of(inst, &medium_ids);
    let medium_bound = int(4) * fc.eps * fc.t;
    parts.push(block("medium", medium_ids, list_schedule_jobs(&medium, m, resource), medium_bound, &mut sched, &mut offset));

    Layout { schedule: sched, parts }
}

/// Restarts every job, in order of its current start, at the earliest feasible time. Starts
/// never move later.
pub fn compact(inst: &Instance, sched: &Schedule) -> Schedule {
    let map = inst.job_map();
    let mut order: Vec<(&Rational, JobId)> = sched.starts.iter().map(|(id, s)| (s, *id)).collect();
    order.sort();
    let mut sky: Skyline<Rational> = Skyline::new();
    let mut out = Schedule::new();
    for (old, id) in order {
        let j = map[&id];
        let s = sky
            .earliest_fit(&j.p, j.r, inst.m, inst.resource, &Rational::zero(), |t| t.clone())
            .expect("job fits an empty machine");
        debug_assert!(&s <= old);
        let e = &s + &j.p;
        sky.add(&s, &e, j.r);
        out.insert(id, s);
    }
    out
}
