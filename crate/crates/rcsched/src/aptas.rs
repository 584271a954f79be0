//! Approximation with additive `p_max`: search over horizons, place the long jobs on the
//! layer grid, fill the residual capacity with short jobs, then stack the removed long jobs
//! and the medium jobs on top.

use crate::assemble::{assemble, Extras, FillContext, Skeleton};
use crate::large::{place_large, GridContext, GridJob, LargePlacement};
use crate::model::{Instance, JobId};
use crate::rational::Rational;
use crate::solve::{
    finish, search_horizon, Certificate, LargeStatsRecord, Prepared, Probe, SolveError, SolveResult, SolverOptions,
};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Runs the driver with default options.
pub fn aptas(inst: &Instance, eps: &Rational) -> Result<SolveResult, SolveError> {
    aptas_with(inst, eps, &SolverOptions::default())
}

pub fn aptas_with(inst: &Instance, eps: &Rational, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    let prep = Prepared::new(inst, eps)?;
    let jobs = prep.grid_jobs(&BTreeSet::new());
    let (mut result, attempts) =
        search_horizon(&prep, |l| probe(inst, &prep, &jobs, opts, l), |r: &SolveResult| r.makespan().clone())?;
    result.certificate.attempts = attempts;
    Ok(result)
}

/// Skeleton of the jobs kept by a large placement.
pub(crate) fn kept_skeleton(count: u64, jobs: &[GridJob], pl: &LargePlacement) -> Skeleton {
    let jobs: Vec<GridJob> = jobs.iter().filter(|j| !pl.removed.contains(&j.id)).cloned().collect();
    let starts = jobs.iter().map(|j| (j.id, pl.starts[&j.id])).collect();
    Skeleton { count, jobs, starts }
}

/// Certificate with the instance-level fields filled in.
pub(crate) fn base_certificate(algo: &str, prep: &Prepared, l: u64, layers: u64) -> Certificate {
    Certificate {
        algo: algo.into(),
        eps: prep.eps.clone(),
        t: prep.s.t.clone(),
        t_prime: prep.t_prime(l),
        delta: prep.s.gap.delta.clone(),
        mu: prep.s.gap.mu.clone(),
        gap_index: prep.s.gap.gap_index,
        layers,
        step: prep.step.clone(),
        parts: Vec::new(),
        parts_sum: Rational::zero(),
        layout_makespan: Rational::zero(),
        makespan: Rational::zero(),
        rounding_slack: prep.rounding_slack(),
        large: LargeStatsRecord::default(),
        small: None,
        attempts: Vec::new(),
        gap: None,
        cases_tried: BTreeMap::new(),
    }
}

fn probe(inst: &Instance, prep: &Prepared, jobs: &[GridJob], opts: &SolverOptions, l: u64) -> Probe<SolveResult> {
    let count = l * prep.per_l;
    let ctx = GridContext { count, m: inst.m, resource: inst.resource, gamma: Rational::one(), huge_align: 1 };
    let fc = FillContext { inst, eps: &prep.eps, t: &prep.s.t, step: &prep.step, small: &prep.small };
    let mut small_err = None;
    let out = match place_large(&ctx, jobs, &opts.large, |pl| {
        let sk = kept_skeleton(count, jobs, pl);
        match fc.fill(&sk) {
            Ok(f) => Some((sk, f)),
            Err(e) => {
                small_err = Some(e);
                None
            }
        }
    }) {
        Ok(o) => o,
        Err(e) => return Probe::from_large_error(e),
    };
    let Some((pl, (sk, filled))) = out.found else {
        return Probe { built: None, budget_hit: out.stats.budget_hit, note: small_err.map(|e| e.to_string()) };
    };
    let top: Vec<JobId> = pl.removed.iter().copied().collect();
    let layout = assemble(&fc, &sk, &filled, &Extras { top: &top, top_bound: inst.p_max(), medium: &prep.s.classes.medium });
    let mut cert = base_certificate("aptas", prep, l, count);
    cert.parts = layout.parts;
    cert.large = LargeStatsRecord::from_stats(&out.stats, top.len());
    cert.small = Some(filled.plan.stats);
    Probe { built: Some(finish(inst, opts, layout.schedule, cert)), budget_hit: out.stats.budget_hit, note: None }
}
