//! Integral placement of short jobs from a reduced window solution.
//!
//! Box time is spread over the box's segments next-fit. Inside a segment the pieces are laid
//! out back to back, grouped by window. Wide jobs fill machine lanes of their type; narrow
//! jobs are list scheduled inside their window's span. Whatever does not fit is deferred.

use super::config_lp::{Configuration, SmallType};
use super::windows::{GenConfigSolution, Place, Window};
use crate::model::{Job, JobId};
use crate::rational::Rational;
use crate::skyline::Skyline;
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;

/// A stretch of time with fixed residual capacity that receives short jobs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    /// Box the block belongs to, if any.
    pub box_index: Option<usize>,
    pub machines: u64,
    pub resource: u64,
    /// Maximum time the block may be filled with.
    #[serde(with = "crate::rational::serde_q")]
    pub capacity: Rational,
}

/// One generalized configuration piece inside a block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub wide: Configuration,
    pub window: Window,
    #[serde(with = "crate::rational::serde_q")]
    pub offset: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub length: Rational,
}

/// Placement of short jobs relative to the start of each block.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BlockFill {
    pub pieces: Vec<Piece>,
    #[serde(with = "crate::rational::serde_q")]
    pub used: Rational,
    #[serde(with = "crate::rational::serde_q_map")]
    pub starts: BTreeMap<JobId, Rational>,
}

/// Result of [`place_integral`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IntegralPlacement {
    pub blocks: Vec<BlockFill>,
    /// Narrow jobs for the end window, relative to its start.
    pub end: BlockFill,
    pub deferred: Vec<JobId>,
}

/// Spreads box time over blocks next-fit, keeping pieces of one window adjacent.
pub fn disaggregate(sol: &GenConfigSolution, blocks: &[Block]) -> Vec<Vec<Piece>> {
    let mut out: Vec<Vec<Piece>> = vec![Vec::new(); blocks.len()];
    let mut fill: Vec<Rational> = vec![Rational::zero(); blocks.len()];
    let mut boxes: Vec<usize> = blocks.iter().filter_map(|b| b.box_index).collect();
    boxes.sort_unstable();
    boxes.dedup();
    for b in boxes {
        let targets: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].box_index == Some(b)).collect();
        let mut entries: Vec<_> = sol.entries.iter().filter(|e| e.box_index == b).collect();
        entries.sort_by(|a, c| c.window.cmp(&a.window).then(a.wide.cmp(&c.wide)));
        let mut t = 0;
        for e in entries {
            let mut rest = e.x.clone();
            while !rest.is_zero() {
                let Some(&bi) = targets.get(t) else {
                    // only reachable if the caps were exceeded; put the rest in the last block
                    let bi = *targets.last().expect("box has blocks");
                    out[bi].push(Piece { wide: e.wide.clone(), window: e.window, offset: fill[bi].clone(), length: rest.clone() });
                    fill[bi] += &rest;
                    break;
                };
                let room = &blocks[bi].capacity - &fill[bi];
                if room <= Rational::zero() {
                    t += 1;
                    continue;
                }
                let take = room.min(rest.clone());
                out[bi].push(Piece { wide: e.wide.clone(), window: e.window, offset: fill[bi].clone(), length: take.clone() });
                fill[bi] += &take;
                rest -= take;
            }
        }
    }
    out
}

struct Lane {
    block: usize,
    cursor: Rational,
    end: Rational,
}

/// Places the original short jobs. `job_type` maps every job to its rounded type.
pub fn place_integral(
    types: &[SmallType],
    sol: &GenConfigSolution,
    blocks: &[Block],
    jobs: &[Job],
    job_type: &BTreeMap<JobId, usize>,
    m: u64,
    resource: u64,
) -> IntegralPlacement {
    let pieces = disaggregate(sol, blocks);
    let mut result = IntegralPlacement {
        blocks: pieces
            .iter()
            .map(|ps| BlockFill {
                pieces: ps.clone(),
                used: ps.iter().map(|p| p.length.clone()).sum(),
                starts: BTreeMap::new(),
            })
            .collect(),
        ..IntegralPlacement::default()
    };

    let mut by_type: Vec<Vec<&Job>> = vec![Vec::new(); types.len()];
    for j in jobs {
        by_type[job_type[&j.id]].push(j);
    }
    for list in &mut by_type {
        list.sort_by(|a, b| b.r.cmp(&a.r).then(a.id.cmp(&b.id)));
    }

    // wide jobs into lanes
    for (t, list) in by_type.iter().enumerate().filter(|(t, _)| types[*t].wide) {
        let mut lanes: Vec<Lane> = Vec::new();
        for (bi, ps) in pieces.iter().enumerate() {
            for p in ps {
                for _ in 0..p.wide.count(t) {
                    lanes.push(Lane { block: bi, cursor: p.offset.clone(), end: &p.offset + &p.length });
                }
            }
        }
        let mut li = 0;
        for job in list {
            while li < lanes.len() && &lanes[li].cursor + &job.p > lanes[li].end {
                li += 1;
            }
            match lanes.get_mut(li) {
                Some(lane) => {
                    result.blocks[lane.block].starts.insert(job.id, lane.cursor.clone());
                    lane.cursor += &job.p;
                }
                None => result.deferred.push(job.id),
            }
        }
    }

    // narrow jobs: split each window's load over its spans, then assign jobs next-fit
    struct Bin {
        block: Option<usize>,
        window: Window,
        start: Rational,
        length: Rational,
        load: Vec<Rational>,
        jobs: Vec<JobId>,
    }
    let mut bins: Vec<Bin> = Vec::new();
    for (bi, ps) in pieces.iter().enumerate() {
        let b = blocks[bi].box_index;
        let mut spans: BTreeMap<Window, (Rational, Rational)> = BTreeMap::new();
        for p in ps {
            let s = spans.entry(p.window).or_insert_with(|| (p.offset.clone(), Rational::zero()));
            s.1 += &p.length;
        }
        for (w, (start, length)) in spans {
            let mut load = vec![Rational::zero(); types.len()];
            if let Some(b) = b {
                let total = sol.window_time(Place::Box(b), &w);
                for l in sol.loads.iter().filter(|l| l.place == Place::Box(b) && l.window == w) {
                    load[l.type_index] += &l.y * &length / &total;
                }
            }
            bins.push(Bin { block: Some(bi), window: w, start, length, load, jobs: Vec::new() });
        }
    }
    let mut end_load = vec![Rational::zero(); types.len()];
    for l in sol.loads.iter().filter(|l| l.place == Place::End) {
        end_load[l.type_index] += &l.y;
    }
    bins.push(Bin {
        block: None,
        window: Window { machines: m, resource },
        start: Rational::zero(),
        length: Rational::zero(),
        load: end_load,
        jobs: Vec::new(),
    });
    for (t, list) in by_type.iter().enumerate().filter(|(t, _)| !types[*t].wide) {
        let order: Vec<usize> = (0..bins.len()).filter(|&i| !bins[i].load[t].is_zero()).collect();
        let mut k = 0;
        for job in list {
            while k < order.len() && bins[order[k]].load[t] < job.p {
                k += 1;
            }
            match order.get(k) {
                Some(&bi) => {
                    bins[bi].load[t] -= &job.p;
                    bins[bi].jobs.push(job.id);
                }
                None => result.deferred.push(job.id),
            }
        }
    }
    let by_id: BTreeMap<JobId, &Job> = jobs.iter().map(|j| (j.id, j)).collect();
    for bin in bins {
        let mut assigned: Vec<&Job> = bin.jobs.iter().map(|id| by_id[id]).collect();
        assigned.sort_by(|a, b| b.r.cmp(&a.r).then(a.id.cmp(&b.id)));
        let mut sky: Skyline<Rational> = Skyline::new();
        let limit = &bin.start + &bin.length;
        for job in assigned {
            let Some(s) = sky.earliest_fit(&job.p, job.r, bin.window.machines, bin.window.resource, &bin.start, |t| t.clone())
            else {
                result.deferred.push(job.id);
                continue;
            };
            let e = &s + &job.p;
            match bin.block {
                Some(_) if e > limit => result.deferred.push(job.id),
                Some(bi) => {
                    sky.add(&s, &e, job.r);
                    result.blocks[bi].starts.insert(job.id, s);
                }
                None => {
                    sky.add(&s, &e, job.r);
                    result.end.used = result.end.used.clone().max(e);
                    result.end.starts.insert(job.id, s);
                }
            }
        }
    }
    result.deferred.sort_unstable();
    result
}
