//! `(3/2 + eps)`-approximation. Jobs longer than half the horizon ("huge") are never
//! removed by the long-job placement. The removed jobs are either stacked on top (each is at
//! most half the horizon long) or put into a gap opened by shifting part of the skeleton up
//! by half the horizon.

use crate::aptas::{base_certificate, kept_skeleton};
use crate::assemble::{assemble, Extras, FillContext, Filled, Skeleton};
use crate::large::{place_large, GridContext, GridJob, LargeError};
use crate::model::{Instance, Job, JobId};
use crate::rational::{ceil_int, int, uint, Rational};
use crate::skyline::Skyline;
use crate::solve::{
    finish, scan_gap, search_horizon, GapPlacement, GapScan, LargeStatsRecord, Prepared, Probe, SolveError,
    SolveResult, SolverOptions,
};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Splits long jobs into huge (`p > T'/2`) and the rest.
pub fn classify_huge(large: &[Job], t_prime: &Rational) -> (BTreeSet<JobId>, BTreeSet<JobId>) {
    let half = t_prime / int(2);
    let (huge, rest): (Vec<&Job>, Vec<&Job>) = large.iter().partition(|j| j.p > half);
    (huge.iter().map(|j| j.id).collect(), rest.iter().map(|j| j.id).collect())
}

/// All aligned start combinations of the huge jobs that fit the horizon and the capacities.
pub fn few_huge_guesses(
    huge: &[GridJob],
    count: u64,
    align: u64,
    m: u64,
    resource: u64,
    budget: u64,
) -> Result<Vec<BTreeMap<JobId, u64>>, LargeError> {
    fn rec(
        huge: &[GridJob],
        i: usize,
        sky: &Skyline<u64>,
        cur: &mut BTreeMap<JobId, u64>,
        out: &mut Vec<BTreeMap<JobId, u64>>,
        lim: (u64, u64, u64, u64, u64),
    ) -> Result<(), LargeError> {
        let (count, align, m, resource, budget) = lim;
        if i == huge.len() {
            if out.len() as u64 >= budget {
                return Err(LargeError::Budget(budget));
            }
            out.push(cur.clone());
            return Ok(());
        }
        let j = &huge[i];
        let mut s = 0;
        while s + j.len <= count {
            if sky.fits(&s, &(s + j.len), j.r, m, resource) {
                let mut next = sky.clone();
                next.add(&s, &(s + j.len), j.r);
                cur.insert(j.id, s);
                rec(huge, i + 1, &next, cur, out, lim)?;
                cur.remove(&j.id);
            }
            s += align.max(1);
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(huge, 0, &Skyline::new(), &mut BTreeMap::new(), &mut out, (count, align, m, resource, budget))?;
    Ok(out)
}

/// Branch of the shift construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Case {
    C11,
    C121,
    C122,
    C211,
    C212,
    C221,
    C222,
}

impl Case {
    pub const ALL: [Case; 7] = [Case::C11, Case::C121, Case::C122, Case::C211, Case::C212, Case::C221, Case::C222];

    pub fn label(self) -> &'static str {
        match self {
            Case::C11 => "1.1",
            Case::C121 => "1.2.1",
            Case::C122 => "1.2.2",
            Case::C211 => "2.1.1",
            Case::C212 => "2.1.2",
            Case::C221 => "2.2.1",
            Case::C222 => "2.2.2",
        }
    }
}

/// One candidate shift: the case, its grid points and any huge jobs pulled down.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftContext {
    pub case: Case,
    pub tau: u64,
    pub rho: Option<u64>,
    pub rho_prime: Option<u64>,
    pub tau_prime: Option<u64>,
    pub iota: Option<u64>,
    pub pulled: Vec<JobId>,
}

/// Skeleton (without the removed jobs) and the numbers the case analysis depends on.
pub struct ShiftSetting<'a> {
    pub sk: &'a Skeleton,
    pub m: u64,
    pub resource: u64,
    /// Number of removed jobs.
    pub k: u64,
    pub gamma: &'a Rational,
    pub huge_align: u64,
}

impl ShiftSetting<'_> {
    fn count(&self) -> u64 {
        self.sk.count
    }

    /// Gap length in layers: half the horizon rounded up.
    pub fn half(&self) -> u64 {
        self.count().div_ceil(2)
    }

    fn start(&self, j: &GridJob) -> u64 {
        self.sk.starts[&j.id]
    }

    fn end(&self, j: &GridJob) -> u64 {
        self.start(j) + j.len
    }

    /// Starts strictly before half the horizon.
    fn pre(&self, j: &GridJob) -> bool {
        2 * self.start(j) < self.count()
    }

    fn gamma_r(&self) -> Rational {
        self.gamma * uint(self.resource)
    }

    fn rest_r(&self) -> Rational {
        uint(self.resource) - self.gamma_r()
    }

    /// Early-starting jobs still running after `s`.
    fn crossing(&self, s: u64) -> impl Iterator<Item = &GridJob> {
        self.sk.jobs.iter().filter(move |j| self.pre(j) && self.end(j) > s)
    }

    /// Resource of early-starting jobs ending at or after `s`.
    fn reaching_r(&self, s: u64) -> u64 {
        self.sk.jobs.iter().filter(|j| self.pre(j) && self.end(j) >= s).map(|j| j.r).sum()
    }

    fn first_point(&self, from: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
        (from..=self.count()).find(|&s| pred(s))
    }
}

/// Every candidate `tau` (all grid points from half the horizon on with at most `m - k`
/// crossing early jobs) together with the branch its predicates select.
pub fn build_shift_candidates(st: &ShiftSetting<'_>) -> Vec<ShiftContext> {
    let c = st.count();
    let limit = st.m.saturating_sub(st.k) as usize;
    let mut out = Vec::new();
    for tau in c.div_ceil(2)..=c {
        if st.crossing(tau).count() > limit {
            continue;
        }
        out.extend(contexts_at(st, tau));
    }
    out
}

fn contexts_at(st: &ShiftSetting<'_>, tau: u64) -> Vec<ShiftContext> {
    let c = st.count();
    let base = ShiftContext { case: Case::C11, tau, rho: None, rho_prime: None, tau_prime: None, iota: None, pulled: vec![] };
    let rho_at_most = |k: u64| st.first_point(tau, |s| st.crossing(s).count() as u64 <= k);
    if uint(st.reaching_r(tau)) <= st.rest_r() {
        // late starters crossing tau
        let late: Vec<&GridJob> = st
            .sk
            .jobs
            .iter()
            .filter(|j| !j.huge && !st.pre(j) && st.start(j) < tau && st.end(j) > tau)
            .collect();
        if uint(late.iter().map(|j| j.r).sum::<u64>()) <= st.rest_r() {
            return vec![base];
        }
        let mut by_end: BTreeMap<u64, u64> = BTreeMap::new();
        for j in &late {
            *by_end.entry(st.end(j)).or_default() += j.r;
        }
        let rho = rho_at_most(st.k);
        by_end
            .into_iter()
            .filter(|(_, r)| uint(*r) >= st.gamma_r())
            .map(|(iota, _)| {
                let case = if rho.map(|r| r >= iota).unwrap_or(false) { Case::C121 } else { Case::C122 };
                ShiftContext { case, rho, iota: Some(iota), ..base.clone() }
            })
            .collect()
    } else {
        let mid: Vec<&GridJob> =
            st.sk.jobs.iter().filter(|j| !j.huge && st.pre(j) && c < 2 * st.end(j)).collect();
        let mid_r: u64 = mid.iter().map(|j| j.r).sum();
        if uint(mid_r) >= int(2) * st.gamma_r() {
            let tau_prime = st.first_point(tau, |s| {
                uint(mid.iter().filter(|j| st.end(j) <= s).map(|j| j.r).sum::<u64>()) >= st.gamma_r()
            });
            let rho = rho_at_most(st.k);
            let case = match (rho, tau_prime) {
                (Some(r), Some(t)) if r >= t => Case::C211,
                _ => Case::C212,
            };
            vec![ShiftContext { case, rho, tau_prime, ..base }]
        } else {
            let rho = st.first_point(tau, |s| (st.crossing(s).count() as u64) < st.k).or(Some(c));
            let r = rho.expect("set above");
            if uint(st.reaching_r(r)) >= st.gamma_r() {
                return vec![ShiftContext { case: Case::C221, rho, ..base }];
            }
            let a = st.huge_align.max(1);
            let rho_prime = (tau.div_ceil(a) * a..=r)
                .step_by(a as usize)
                .find(|&s| uint(st.reaching_r(s)) <= st.gamma_r())
                .or(Some(r));
            let pulled = pull_class(st, tau, r);
            vec![ShiftContext { case: Case::C222, rho, rho_prime, pulled, ..base }]
        }
    }
}

/// Huge jobs ending in `(tau, rho]`, grouped by length; from the first group with resource at
/// least `3 gamma R` (or the heaviest group) take the widest until `gamma R` is reached.
fn pull_class(st: &ShiftSetting<'_>, tau: u64, rho: u64) -> Vec<JobId> {
    let mut groups: BTreeMap<u64, Vec<&GridJob>> = BTreeMap::new();
    for j in st.sk.jobs.iter().filter(|j| j.huge && st.end(j) > tau && st.end(j) <= rho) {
        groups.entry(j.len).or_default().push(j);
    }
    let total = |g: &Vec<&GridJob>| g.iter().map(|j| j.r).sum::<u64>();
    let three = int(3) * st.gamma_r();
    let chosen = groups
        .values()
        .find(|g| uint(total(g)) >= three)
        .or_else(|| groups.values().max_by_key(|g| total(g)));
    let Some(group) = chosen else { return vec![] };
    let mut g = group.clone();
    g.sort_by(|a, b| b.r.cmp(&a.r).then(a.id.cmp(&b.id)));
    let mut acc = 0u64;
    let mut out = Vec::new();
    for j in g {
        if uint(acc) >= st.gamma_r() {
            break;
        }
        acc += j.r;
        out.push(j.id);
    }
    out
}

/// Shifted skeleton over `count + half` layers and the first layer of the gap.
pub fn apply_shift(st: &ShiftSetting<'_>, ctx: &ShiftContext) -> (Skeleton, u64) {
    let c = st.count();
    let g = st.half();
    let tau = ctx.tau;
    let mut starts: BTreeMap<JobId, u64> = BTreeMap::new();
    for j in &st.sk.jobs {
        let s = st.start(j);
        let e = st.end(j);
        let new = if !j.huge && !st.pre(j) && e >= tau {
            s + g
        } else if j.huge && s < tau && tau < e {
            c - j.len
        } else {
            s
        };
        starts.insert(j.id, new);
    }
    // keep at most k huge jobs ending by tau; extra ones ending exactly at tau move to the end
    let mut early: Vec<&GridJob> = st.sk.jobs.iter().filter(|j| j.huge && st.end(j) <= tau).collect();
    early.sort_by_key(|j| (std::cmp::Reverse(st.end(j)), j.id));
    let mut excess = early.len().saturating_sub(st.k as usize);
    for j in early {
        if excess == 0 || st.end(j) != tau {
            break;
        }
        starts.insert(j.id, c - j.len);
        excess -= 1;
    }

    let gap = match ctx.case {
        Case::C11 => tau,
        Case::C121 => {
            let iota = ctx.iota.expect("1.2 has iota");
            for j in st.sk.jobs.iter().filter(|j| !j.huge && !st.pre(j) && st.start(j) < tau && st.end(j) == iota) {
                starts.insert(j.id, st.start(j));
            }
            iota
        }
        Case::C211 => ctx.tau_prime.expect("2.1 has tau'"),
        Case::C122 | Case::C212 | Case::C221 | Case::C222 => {
            let rho = ctx.rho.unwrap_or(c);
            for j in st.sk.jobs.iter().filter(|j| j.huge) {
                let (s, e) = (st.start(j), st.end(j));
                if e > rho {
                    starts.insert(j.id, s);
                } else if e > tau || starts[&j.id] != s {
                    starts.insert(j.id, rho.saturating_sub(j.len));
                }
            }
            for j in &st.sk.jobs {
                let s = starts[&j.id];
                if s >= rho + g {
                    starts.insert(j.id, s - g);
                }
            }
            if ctx.case == Case::C222 {
                let rp = ctx.rho_prime.unwrap_or(rho);
                for id in &ctx.pulled {
                    let j = st.sk.jobs.iter().find(|j| j.id == *id).expect("pulled job exists");
                    starts.insert(*id, rp.saturating_sub(j.len));
                }
            }
            c
        }
    };
    (Skeleton { count: c + g, jobs: st.sk.jobs.clone(), starts }, gap)
}

/// Shifted skeleton with the removed jobs in its gap, if the gap scan passes.
pub fn place_in_gap(
    st: &ShiftSetting<'_>,
    ctx: &ShiftContext,
    removed: &[GridJob],
) -> (Option<Skeleton>, u64, GapScan, Vec<(u64, u64)>) {
    let (shifted, gap) = apply_shift(st, ctx);
    let g = st.half();
    let usage = shifted.usage();
    let window: Vec<(u64, u64)> = usage[gap as usize..(gap + g).min(shifted.count) as usize].to_vec();
    let scan = scan_gap(&window, st.m, st.resource, st.k, st.gamma);
    if !scan.ok || !shifted.within(st.m, st.resource) {
        return (None, gap, scan, window);
    }
    let mut sk = shifted;
    for j in removed {
        sk.jobs.push(j.clone());
        sk.starts.insert(j.id, gap);
    }
    let ok = sk.within(st.m, st.resource);
    (ok.then_some(sk), gap, scan, window)
}

pub fn three_halves(inst: &Instance, eps: &Rational) -> Result<SolveResult, SolveError> {
    three_halves_with(inst, eps, &SolverOptions::default())
}

pub fn three_halves_with(inst: &Instance, eps: &Rational, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    let prep = Prepared::new(inst, eps)?;
    let (mut result, attempts) =
        search_horizon(&prep, |l| probe(inst, &prep, opts, l), |r: &SolveResult| r.makespan().clone())?;
    result.certificate.attempts = attempts;
    Ok(result)
}

struct Chosen {
    sk: Skeleton,
    filled: Filled,
    top: Vec<JobId>,
    gap: GapPlacement,
}

fn probe(inst: &Instance, prep: &Prepared, opts: &SolverOptions, l: u64) -> Probe<SolveResult> {
    let count = l * prep.per_l;
    let t_prime = prep.t_prime(l);
    let large: Vec<Job> = prep.large.iter().map(|(j, _)| j.clone()).collect();
    let (huge, _) = classify_huge(&large, &t_prime);
    let jobs = prep.grid_jobs(&huge);
    let gamma = Rational::new(1.into(), (3 * count + 4).into());
    let huge_align = prep.per_l / prep.inv_eps;
    let ctx = GridContext { count, m: inst.m, resource: inst.resource, gamma: gamma.clone(), huge_align };
    let fc = FillContext { inst, eps: &prep.eps, t: &prep.s.t, step: &prep.step, small: &prep.small };
    let half = count.div_ceil(2);
    let mut tried: BTreeMap<String, u64> = BTreeMap::new();
    let mut note = None;

    let out = place_large(&ctx, &jobs, &opts.large, |pl| {
        let kept = kept_skeleton(count, &jobs, pl);
        let removed: Vec<GridJob> = jobs
            .iter()
            .filter(|j| pl.removed.contains(&j.id))
            .map(|j| {
                // the gap holds the true length, which is at most half the horizon
                let p = &prep.large.iter().find(|(x, _)| x.id == j.id).expect("long job").0.p;
                let len = ceil_int(&(p / &prep.step)).to_u64().expect("fits");
                GridJob { len, ..j.clone() }
            })
            .collect();
        let k = removed.len() as u64;
        let stacked = |case: &str, sk: Skeleton, tried: &mut BTreeMap<String, u64>| -> Option<Chosen> {
            *tried.entry(case.to_string()).or_default() += 1;
            let filled = fc.fill(&sk).ok()?;
            let top: Vec<JobId> = removed.iter().map(|j| j.id).collect();
            let usage = vec![(0, 0); if k == 0 { 0 } else { half as usize }];
            let scan = scan_gap(&usage, inst.m, inst.resource, k, &gamma);
            let gap = GapPlacement {
                case: case.into(),
                start_layer: count,
                layers: if k == 0 { 0 } else { half },
                start: Rational::from_integer(0.into()),
                length: uint(if k == 0 { 0 } else { half }) * &prep.step,
                k,
                gamma: gamma.clone(),
                jobs: top.clone(),
                scan,
                usage,
            };
            Some(Chosen { sk, filled, top, gap })
        };
        if k == 0 {
            return stacked("none", kept, &mut tried);
        }
        if !opts.shift_always && huge.len() as u64 <= 4 * k {
            return stacked("few-huge-direct", kept, &mut tried);
        }
        let st = ShiftSetting { sk: &kept, m: inst.m, resource: inst.resource, k, gamma: &gamma, huge_align };
        for cand in build_shift_candidates(&st) {
            *tried.entry(cand.case.label().to_string()).or_default() += 1;
            let (sk, gap_layer, scan, usage) = place_in_gap(&st, &cand, &removed);
            let Some(sk) = sk else { continue };
            let Ok(filled) = fc.fill(&sk) else { continue };
            let gap = GapPlacement {
                case: cand.case.label().into(),
                start_layer: gap_layer,
                layers: half,
                start: Rational::from_integer(0.into()),
                length: uint(half) * &prep.step,
                k,
                gamma: gamma.clone(),
                jobs: removed.iter().map(|j| j.id).collect(),
                scan,
                usage,
            };
            return Some(Chosen { sk, filled, top: vec![], gap });
        }
        stacked("stack-fallback", kept, &mut tried)
    });
    let out = match out {
        Ok(o) => o,
        Err(e) => return Probe::from_large_error(e),
    };
    let Some((pl, chosen)) = out.found else {
        if !out.stats.budget_hit {
            note = Some("no skeleton accepted".to_string());
        }
        return Probe { built: None, budget_hit: out.stats.budget_hit, note };
    };
    let Chosen { sk, filled, top, mut gap } = chosen;
    let layout = assemble(
        &fc,
        &sk,
        &filled,
        &Extras { top: &top, top_bound: &t_prime / int(2), medium: &prep.s.classes.medium },
    );
    gap.start = if top.is_empty() {
        gap.jobs.first().and_then(|id| layout.schedule.start(*id).cloned()).unwrap_or_default()
    } else {
        layout.parts.iter().find(|p| p.label == "top").map(|p| p.start.clone()).unwrap_or_default()
    };
    let mut cert = base_certificate("three-halves", prep, l, sk.count);
    cert.parts = layout.parts;
    cert.large = LargeStatsRecord::from_stats(&out.stats, pl.removed.len());
    cert.small = Some(filled.plan.stats);
    cert.gap = Some(gap);
    cert.cases_tried = tried;
    Probe { built: Some(finish(inst, opts, layout.schedule, cert)), budget_hit: out.stats.budget_hit, note: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::solve::certify;

    fn gj(id: u64, len: u64, r: u64, huge: bool) -> GridJob {
        GridJob { id, len, r, huge }
    }

    #[test]
    fn huge_threshold_is_strict() {
        let jobs = vec![Job::new(0, int(2), 1), Job::new(1, rat(5, 2), 1), Job::new(2, int(4), 1)];
        let (h, rest) = classify_huge(&jobs, &int(4));
        assert_eq!(h, BTreeSet::from([1, 2]));
        assert_eq!(rest, BTreeSet::from([0]));
        let (h, _) = classify_huge(&jobs[..1], &int(4));
        assert!(h.is_empty());
    }

    #[test]
    fn direct_guesses() {
        assert_eq!(few_huge_guesses(&[], 8, 2, 1, 1, 10).unwrap(), vec![BTreeMap::new()]);
        // length 5 in 9 layers with alignment 2: starts 0, 2, 4
        let g = few_huge_guesses(&[gj(0, 5, 1, true)], 9, 2, 1, 1, 10).unwrap();
        assert_eq!(g.len(), 3);
        assert!(matches!(few_huge_guesses(&[gj(0, 5, 1, true)], 9, 2, 1, 1, 2), Err(LargeError::Budget(2))));
    }

    fn setting_skeleton(jobs: Vec<(GridJob, u64)>, count: u64) -> Skeleton {
        let starts = jobs.iter().map(|(j, s)| (j.id, *s)).collect();
        Skeleton { count, jobs: jobs.into_iter().map(|(j, _)| j).collect(), starts }
    }

    #[test]
    fn nothing_crossing_half_gives_case_one_one() {
        let sk = setting_skeleton(vec![(gj(0, 2, 1, false), 0)], 8);
        let gamma = rat(1, 28);
        let st = ShiftSetting { sk: &sk, m: 4, resource: 10, k: 1, gamma: &gamma, huge_align: 1 };
        let c = build_shift_candidates(&st);
        assert_eq!(c[0].tau, 4);
        assert_eq!(c[0].case, Case::C11);
        let (shifted, gap) = apply_shift(&st, &c[0]);
        assert_eq!(gap, 4);
        assert_eq!(shifted.starts, sk.starts);
        assert_eq!(shifted.count, 12);
    }

    #[test]
    fn full_resource_crossing_job_selects_case_two() {
        // one long job from 0 to 6 with r = R crosses the midpoint of 8 layers
        let sk = setting_skeleton(vec![(gj(0, 6, 10, false), 0)], 8);
        let gamma = rat(1, 28);
        let st = ShiftSetting { sk: &sk, m: 4, resource: 10, k: 1, gamma: &gamma, huge_align: 1 };
        let c = build_shift_candidates(&st);
        // tau = 4: crossing count 1 <= m - k, reaching resource 10 > R - gamma R
        assert_eq!(c[0].tau, 4);
        // the middle set has r = 10 >= 2 gamma R, tau' = 6 where it has finished; rho = 4
        assert_eq!(c[0].case, Case::C212);
        assert_eq!(c[0].tau_prime, Some(6));
        assert_eq!(c[0].rho, Some(4));
        // at tau = 6 the job still counts (it ends there), and rho = tau' = 6
        assert_eq!(c.iter().find(|x| x.tau == 6).unwrap().case, Case::C211);
        assert_eq!(c.iter().find(|x| x.tau == 7).unwrap().case, Case::C11);
    }

    #[test]
    fn late_heavy_jobs_select_case_one_two() {
        // late jobs (start >= 4) crossing tau = 4... they must start before tau, so tau = 5
        let sk = setting_skeleton(
            vec![(gj(0, 3, 5, false), 4), (gj(1, 2, 5, false), 4), (gj(2, 1, 1, false), 0)],
            8,
        );
        let gamma = rat(1, 28);
        let st = ShiftSetting { sk: &sk, m: 4, resource: 10, k: 1, gamma: &gamma, huge_align: 1 };
        let c: Vec<ShiftContext> = build_shift_candidates(&st).into_iter().filter(|c| c.tau == 5).collect();
        // classes by end: 6 (r = 5) and 7 (r = 5), both at least gamma R
        let iotas: Vec<Option<u64>> = c.iter().map(|x| x.iota).collect();
        assert_eq!(iotas, vec![Some(6), Some(7)]);
        // rho = 5 (nothing early crosses), so rho < iota
        assert!(c.iter().all(|x| x.case == Case::C122));
    }

    #[test]
    fn gap_scan_rejects_blocked_gap() {
        let sk = setting_skeleton(vec![(gj(0, 8, 10, false), 0)], 8);
        let gamma = rat(1, 28);
        let st = ShiftSetting { sk: &sk, m: 2, resource: 10, k: 1, gamma: &gamma, huge_align: 1 };
        let ctx = ShiftContext { case: Case::C11, tau: 4, rho: None, rho_prime: None, tau_prime: None, iota: None, pulled: vec![] };
        let (placed, _, scan, _) = place_in_gap(&st, &ctx, &[gj(9, 2, 1, false)]);
        assert!(placed.is_none());
        assert!(!scan.ok);
        assert_eq!(scan.min_free_resource, 0);
    }

    #[test]
    fn single_job() {
        let inst = Instance::from_pairs(1, 1, &[(int(3), 1)]).unwrap();
        let r = three_halves(&inst, &rat(1, 2)).unwrap();
        assert_eq!(r.makespan(), &int(3));
        assert!(certify(&r, &inst, &rat(1, 2)).ok());
    }
}
