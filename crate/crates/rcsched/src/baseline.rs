//! Greedy list scheduling (serial generation scheme) and the brute-force oracle.

use crate::model::{Instance, Job, JobId, Schedule};
use crate::rational::{uint, Rational};
use crate::skyline::Skyline;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeSet;

/// Default cap on the number of jobs the oracle accepts.
pub const ORACLE_CAP: usize = 8;

/// Errors from this module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("job order is not a permutation of the instance's job ids")]
    InvalidOrder,
    #[error("oracle refuses {n} jobs (cap {cap})")]
    TooManyJobs { n: usize, cap: usize },
}

/// A priority list: a permutation of the instance's job ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobOrder(Vec<JobId>);

impl JobOrder {
    pub fn new(inst: &Instance, ids: Vec<JobId>) -> Result<Self, BaselineError> {
        let want: BTreeSet<JobId> = inst.jobs.iter().map(|j| j.id).collect();
        let got: BTreeSet<JobId> = ids.iter().copied().collect();
        if got.len() != ids.len() || got != want {
            return Err(BaselineError::InvalidOrder);
        }
        Ok(JobOrder(ids))
    }

    pub fn ids(&self) -> &[JobId] {
        &self.0
    }
}

/// Non-increasing processing time, ties by id.
pub fn default_order(inst: &Instance) -> JobOrder {
    let mut jobs: Vec<&Job> = inst.jobs.iter().collect();
    jobs.sort_by(|a, b| b.p.cmp(&a.p).then(a.id.cmp(&b.id)));
    JobOrder(jobs.iter().map(|j| j.id).collect())
}

/// Integer image of processing times under a common scale, when it fits in `u64`.
pub(crate) struct Scaled {
    pub unit: Rational,
    pub p: Vec<u64>,
}

pub(crate) fn scale_to_integers(jobs: &[Job]) -> Option<Scaled> {
    let mut den = BigInt::one();
    for j in jobs {
        den = den.lcm(j.p.denom());
    }
    let mut p = Vec::with_capacity(jobs.len());
    let mut total: u64 = 0;
    for j in jobs {
        let v = (j.p.numer() * (&den / j.p.denom())).to_u64()?;
        total = total.checked_add(v)?;
        p.push(v);
    }
    // keep headroom for sums of starts and lengths
    if total > u64::MAX / 4 {
        return None;
    }
    Some(Scaled { unit: Rational::new(BigInt::one(), den), p })
}

fn sgs_generic<T>(p: &[T], r: &[u64], order: &[usize], m: u64, cap: u64) -> Vec<T>
where
    T: Clone + Ord + Zero,
    for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
{
    let mut sky: Skyline<T> = Skyline::new();
    let mut starts = vec![T::zero(); p.len()];
    for &i in order {
        let s = sky
            .earliest_fit(&p[i], r[i], m, cap, &T::zero(), |t| t.clone())
            .expect("validated instances always fit eventually");
        let e = &s + &p[i];
        sky.add(&s, &e, r[i]);
        starts[i] = s;
    }
    starts
}

/// Serial generation scheme over jobs `jobs` in the index order `order`, on `m`
/// machines with resource `cap`. Returns start times aligned with `jobs`.
pub(crate) fn sgs_starts(jobs: &[Job], order: &[usize], m: u64, cap: u64) -> Vec<Rational> {
    let r: Vec<u64> = jobs.iter().map(|j| j.r).collect();
    match scale_to_integers(jobs) {
        Some(sc) => sgs_generic(&sc.p, &r, order, m, cap)
            .into_iter()
            .map(|s| uint(s) * &sc.unit)
            .collect(),
        None => {
            let p: Vec<Rational> = jobs.iter().map(|j| j.p.clone()).collect();
            sgs_generic(&p, &r, order, m, cap)
        }
    }
}

/// List-schedules `jobs` (a subset of some instance) in the given order with capacities
/// `m` and `cap`, starting at time 0.
pub fn list_schedule_jobs(jobs: &[Job], m: u64, cap: u64) -> Schedule {
    let mut idx: Vec<usize> = (0..jobs.len()).collect();
    idx.sort_by(|&a, &b| jobs[b].p.cmp(&jobs[a].p).then(jobs[a].id.cmp(&jobs[b].id)));
    let starts = sgs_starts(jobs, &idx, m, cap);
    let mut out = Schedule::new();
    for (j, s) in jobs.iter().zip(starts) {
        out.insert(j.id, s);
    }
    out
}

/// Greedy list schedule: each job in list order starts at the earliest time at which a
/// machine and enough resource stay free for its whole duration.
pub fn greedy_list_schedule(inst: &Instance, order: &JobOrder) -> Schedule {
    let pos: std::collections::BTreeMap<JobId, usize> =
        inst.jobs.iter().enumerate().map(|(i, j)| (j.id, i)).collect();
    let idx: Vec<usize> = order.ids().iter().map(|id| pos[id]).collect();
    let starts = sgs_starts(&inst.jobs, &idx, inst.m, inst.resource);
    let mut out = Schedule::new();
    for (j, s) in inst.jobs.iter().zip(starts) {
        out.insert(j.id, s);
    }
    out
}

/// Greedy list schedule with the default order.
pub fn greedy(inst: &Instance) -> Schedule {
    greedy_list_schedule(inst, &default_order(inst))
}

/// `(1/m) p(J) + (2/R) area(J) + p_max`, the list-scheduling makespan bound.
pub fn greedy_bound(inst: &Instance) -> Rational {
    greedy_bound_jobs(&inst.jobs, inst.m, inst.resource)
}

/// The list-scheduling bound for a job subset under capacities `m`, `cap`.
pub fn greedy_bound_jobs(jobs: &[Job], m: u64, cap: u64) -> Rational {
    crate::model::total_p(jobs) / uint(m)
        + crate::model::area(jobs) * Rational::new(BigInt::from(2), BigInt::from(cap))
        + crate::model::p_max(jobs)
}

/// Exact optimum for tiny instances: the best serial-generation schedule over all job
/// orders. Refuses more than [`ORACLE_CAP`] jobs.
pub fn oracle_optimal(inst: &Instance) -> Result<(Schedule, Rational), BaselineError> {
    oracle_optimal_capped(inst, ORACLE_CAP)
}

/// [`oracle_optimal`] with an explicit job cap.
pub fn oracle_optimal_capped(inst: &Instance, cap: usize) -> Result<(Schedule, Rational), BaselineError> {
    let n = inst.n();
    if n > cap {
        return Err(BaselineError::TooManyJobs { n, cap });
    }
    if n == 0 {
        return Ok((Schedule::new(), Rational::zero()));
    }
    let r: Vec<u64> = inst.jobs.iter().map(|j| j.r).collect();
    let (starts, best): (Vec<Rational>, Rational) = match scale_to_integers(&inst.jobs) {
        Some(sc) => {
            let (s, b) = oracle_search(&sc.p, &r, inst.m, inst.resource);
            (s.into_iter().map(|x| uint(x) * &sc.unit).collect(), uint(b) * &sc.unit)
        }
        None => {
            let p: Vec<Rational> = inst.jobs.iter().map(|j| j.p.clone()).collect();
            oracle_search(&p, &r, inst.m, inst.resource)
        }
    };
    let mut out = Schedule::new();
    for (j, s) in inst.jobs.iter().zip(starts) {
        out.insert(j.id, s);
    }
    Ok((out, best))
}

/// Depth-first enumeration of all orders; a prefix is abandoned once its partial
/// makespan already reaches the best complete one (serial generation never decreases it).
fn oracle_search<T>(p: &[T], r: &[u64], m: u64, cap: u64) -> (Vec<T>, T)
where
    T: Clone + Ord + Zero,
    for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
{
    struct Ctx<'a, T> {
        p: &'a [T],
        r: &'a [u64],
        m: u64,
        cap: u64,
        best: Option<(T, Vec<T>)>,
    }
    fn rec<T>(ctx: &mut Ctx<'_, T>, sky: &Skyline<T>, used: &mut Vec<bool>, starts: &mut Vec<T>, span: T, left: usize)
    where
        T: Clone + Ord + Zero,
        for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
    {
        if let Some((b, _)) = &ctx.best {
            if &span >= b {
                return;
            }
        }
        if left == 0 {
            ctx.best = Some((span, starts.clone()));
            return;
        }
        for i in 0..ctx.p.len() {
            if used[i] {
                continue;
            }
            let s = sky
                .earliest_fit(&ctx.p[i], ctx.r[i], ctx.m, ctx.cap, &T::zero(), |t| t.clone())
                .expect("validated instances always fit eventually");
            let e = &s + &ctx.p[i];
            let mut next = sky.clone();
            next.add(&s, &e, ctx.r[i]);
            used[i] = true;
            let old = std::mem::replace(&mut starts[i], s);
            let span2 = if e > span { e } else { span.clone() };
            rec(ctx, &next, used, starts, span2, left - 1);
            starts[i] = old;
            used[i] = false;
        }
    }
    let n = p.len();
    let mut ctx = Ctx { p, r, m, cap, best: None };
    let mut used = vec![false; n];
    let mut starts = vec![T::zero(); n];
    rec(&mut ctx, &Skyline::new(), &mut used, &mut starts, T::zero(), n);
    let (b, s) = ctx.best.expect("at least one order exists");
    (s, b)
}
