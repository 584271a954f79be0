//! Placement of long jobs on the start-point grid.
//!
//! Everything here works in layer units: a job of length `len` starting at index `i` occupies
//! layers `i..i + len` and must end by `count`. Two routes exist. With few machines every
//! ordering of the long jobs is explored by a budgeted serial generation search. Otherwise
//! the resource-heavy ("wide") jobs are enumerated, a per-layer usage profile is guessed for
//! the others, and a linear program places them fractionally before pruning to an integral
//! placement plus a small set of removed jobs.

use crate::lp::{solve_feasible, BasicSolution, LpError, LpModel, Relation};
use crate::rational::{int, uint, Rational};
use crate::skyline::Skyline;
use crate::model::JobId;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// A long job measured in layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridJob {
    pub id: JobId,
    pub len: u64,
    pub r: u64,
    /// Huge jobs may only start at multiples of [`GridContext::huge_align`].
    pub huge: bool,
}

/// Machine, resource and grid data shared by the routines of this module.
#[derive(Clone, Debug)]
pub struct GridContext {
    /// Number of layers (and start points).
    pub count: u64,
    pub m: u64,
    pub resource: u64,
    /// Bound on the resource share of removed jobs, as a fraction of the resource.
    pub gamma: Rational,
    pub huge_align: u64,
}

impl GridContext {
    fn align(&self, job: &GridJob) -> u64 {
        if job.huge {
            self.huge_align.max(1)
        } else {
            1
        }
    }
}

/// Which placement route to take.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LargeMode {
    /// Enumerate when `gamma * m <= 3 |S|`, otherwise use the LP.
    #[default]
    Auto,
    Enumerate,
    Lp,
}

/// Search limits. Running out of budget makes the current horizon count as failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeOptions {
    pub mode: LargeMode,
    /// Exact profile enumeration is used up to this many profiles.
    pub profile_budget: u64,
    /// Complete placements handed to the acceptance check (leaves or profile evaluations).
    pub guess_budget: u64,
    /// Search nodes in the enumeration route and wide placements in the LP route.
    pub node_budget: u64,
}

impl Default for LargeOptions {
    fn default() -> Self {
        LargeOptions { mode: LargeMode::Auto, profile_budget: 1_000_000, guess_budget: 32, node_budget: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LargeError {
    #[error("search budget of {0} exceeded")]
    Budget(u64),
    #[error("removing the widest job did not bring layer {layer} under its bound")]
    PruneFailed { layer: u64 },
    #[error("pruning removed {count} jobs, more than the bound {bound}")]
    TooManyRemoved { count: usize, bound: u64 },
    #[error("basic solution has {count} fractional jobs, more than {bound}")]
    TooManyFractional { count: usize, bound: u64 },
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
}

/// Per-layer guess of machine count and resource bound for the narrow jobs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub machines: Vec<u64>,
    /// `Some(t)` stands for the bound `R / (1 + 1/m)^t`, `None` for zero.
    pub levels: Vec<Option<u32>>,
}

impl Profile {
    pub fn resource_bound(&self, layer: usize, m: u64, resource: u64) -> Rational {
        match self.levels[layer] {
            None => Rational::zero(),
            Some(t) => level_value(m, resource, t),
        }
    }
}

/// `1 + 1/m`.
pub fn growth(m: u64) -> Rational {
    Rational::one() + Rational::new(1.into(), m.into())
}

/// `R / (1 + 1/m)^t`.
pub fn level_value(m: u64, resource: u64, t: u32) -> Rational {
    uint(resource) / crate::rational::pow(&growth(m), t)
}

/// Smallest `t` with `(1 + 1/m)^t >= R`.
pub fn max_level(m: u64, resource: u64) -> u32 {
    let g = growth(m);
    let target = uint(resource);
    let mut acc = Rational::one();
    let mut t = 0;
    while acc < target {
        acc *= &g;
        t += 1;
    }
    t
}

/// Resource levels usable in a layer with residual resource `residual`, most permissive first.
pub fn admissible_levels(m: u64, resource: u64, residual: u64) -> Vec<Option<u32>> {
    let g = growth(m);
    let mut out = Vec::new();
    let mut has_sub_unit = false;
    let res = uint(residual);
    for t in 0..=max_level(m, resource) {
        let v = level_value(m, resource, t);
        if &v / &g < res {
            if v < Rational::one() {
                has_sub_unit = true;
            }
            out.push(Some(t));
        }
    }
    if !has_sub_unit {
        out.push(None);
    }
    out
}

/// Wide jobs have `r >= alpha R`.
pub fn split_wide_narrow(jobs: &[GridJob], alpha: &Rational, resource: u64) -> (Vec<GridJob>, Vec<GridJob>) {
    let threshold = alpha * uint(resource);
    jobs.iter().cloned().partition(|j| uint(j.r) >= threshold)
}

/// `gamma / (3|S| + 1)`, small enough that `3|S|` narrow jobs stay below `gamma R`.
pub fn choose_alpha(gamma: &Rational, layers: u64) -> Rational {
    gamma / uint(3 * layers + 1)
}

/// Per-layer `(machines, resource)` of the given placement.
pub fn layer_usage(jobs: &[GridJob], starts: &BTreeMap<JobId, u64>, count: u64) -> Vec<(u64, u64)> {
    let mut usage = vec![(0u64, 0u64); count as usize];
    for j in jobs {
        if let Some(&s) = starts.get(&j.id) {
            for l in s..(s + j.len).min(count) {
                usage[l as usize].0 += 1;
                usage[l as usize].1 += j.r;
            }
        }
    }
    usage
}

/// Integral placement of the long jobs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LargePlacement {
    /// Start index of every placed job, wide ones included.
    pub starts: BTreeMap<JobId, u64>,
    /// Jobs set aside by pruning; they are scheduled separately.
    pub removed: BTreeSet<JobId>,
    pub wide_starts: BTreeMap<JobId, u64>,
    pub profile: Option<Profile>,
}

/// Counters describing one call of [`place_large`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LargeStats {
    pub enumerated: bool,
    pub nodes: u64,
    pub leaves: u64,
    pub lp_solves: u64,
    pub profiles_tried: u64,
    pub budget_hit: bool,
    pub max_fractional: usize,
}

/// Result of [`place_large`]: the accepted placement (if any) and the callback's payload.
pub struct LargeOutcome<A> {
    pub found: Option<(LargePlacement, A)>,
    pub stats: LargeStats,
}

/// Tries placements until `accept` returns `Some`.
pub fn place_large<A>(
    ctx: &GridContext,
    jobs: &[GridJob],
    opts: &LargeOptions,
    mut accept: impl FnMut(&LargePlacement) -> Option<A>,
) -> Result<LargeOutcome<A>, LargeError> {
    let mut stats = LargeStats::default();
    let enumerate = match opts.mode {
        LargeMode::Enumerate => true,
        LargeMode::Lp => false,
        LargeMode::Auto => &ctx.gamma * uint(ctx.m) <= uint(3 * ctx.count),
    };
    stats.enumerated = enumerate;
    if jobs.iter().any(|j| j.len > ctx.count || j.r > ctx.resource) {
        return Ok(LargeOutcome { found: None, stats });
    }
    let found = if enumerate {
        enumerate_route(ctx, jobs, opts, &mut accept, &mut stats)
    } else {
        lp_route(ctx, jobs, opts, &mut accept, &mut stats)?
    };
    Ok(LargeOutcome { found, stats })
}

fn job_key(j: &GridJob) -> (u64, u64, bool) {
    (j.len, j.r, j.huge)
}

fn ordered(jobs: &[GridJob]) -> Vec<GridJob> {
    let mut v = jobs.to_vec();
    v.sort_by(|a, b| b.len.cmp(&a.len).then(b.r.cmp(&a.r)).then(a.id.cmp(&b.id)));
    v
}

struct EnumState<'a, A> {
    ctx: &'a GridContext,
    jobs: Vec<GridJob>,
    opts: &'a LargeOptions,
    seen: HashSet<Vec<u64>>,
    result: Option<(LargePlacement, A)>,
    stop: bool,
}

fn enumerate_route<A>(
    ctx: &GridContext,
    jobs: &[GridJob],
    opts: &LargeOptions,
    accept: &mut impl FnMut(&LargePlacement) -> Option<A>,
    stats: &mut LargeStats,
) -> Option<(LargePlacement, A)> {
    let mut st = EnumState { ctx, jobs: ordered(jobs), opts, seen: HashSet::new(), result: None, stop: false };
    let n = st.jobs.len();
    let mut starts = vec![u64::MAX; n];
    let mut used = vec![false; n];
    let sky = Skyline::<u64>::new();
    enum_dfs(&mut st, &sky, &mut starts, &mut used, 0, accept, stats);
    st.result
}

fn enum_dfs<A>(
    st: &mut EnumState<'_, A>,
    sky: &Skyline<u64>,
    starts: &mut Vec<u64>,
    used: &mut Vec<bool>,
    depth: usize,
    accept: &mut impl FnMut(&LargePlacement) -> Option<A>,
    stats: &mut LargeStats,
) {
    if st.stop {
        return;
    }
    stats.nodes += 1;
    if stats.nodes > st.opts.node_budget {
        stats.budget_hit = true;
        st.stop = true;
        return;
    }
    let n = st.jobs.len();
    if depth == n {
        if !st.seen.insert(starts.clone()) {
            return;
        }
        stats.leaves += 1;
        let placement = LargePlacement {
            starts: st.jobs.iter().zip(starts.iter()).map(|(j, &s)| (j.id, s)).collect(),
            ..LargePlacement::default()
        };
        if let Some(a) = accept(&placement) {
            st.result = Some((placement, a));
            st.stop = true;
        } else if stats.leaves >= st.opts.guess_budget {
            stats.budget_hit = true;
            st.stop = true;
        }
        return;
    }
    // Every unplaced job needs a position now: the skyline only grows further down.
    let mut tried = HashSet::new();
    let mut children = Vec::new();
    for i in 0..n {
        if used[i] || !tried.insert(job_key(&st.jobs[i])) {
            continue;
        }
        let job = &st.jobs[i];
        let a = st.ctx.align(job);
        match sky.earliest_fit(&job.len, job.r, st.ctx.m, st.ctx.resource, &0, |t| t.div_ceil(a) * a) {
            Some(s) if s + job.len <= st.ctx.count => children.push((i, s)),
            _ => return,
        }
    }
    if !area_fits(st, sky, used) {
        return;
    }
    for (i, s) in children {
        let job = st.jobs[i].clone();
        let mut next = sky.clone();
        next.add(&s, &(s + job.len), job.r);
        used[i] = true;
        starts[i] = s;
        enum_dfs(st, &next, starts, used, depth + 1, accept, stats);
        used[i] = false;
        starts[i] = u64::MAX;
        if st.stop {
            return;
        }
    }
}

/// Machine-time and resource-time still free below the horizon must cover the unplaced jobs.
fn area_fits<A>(st: &EnumState<'_, A>, sky: &Skyline<u64>, used: &[bool]) -> bool {
    let (mut need_m, mut need_r) = (0u64, 0u64);
    for (j, _) in st.jobs.iter().zip(used).filter(|(_, u)| !**u) {
        need_m += j.len;
        need_r += j.len * j.r;
    }
    let (mut busy_m, mut busy_r) = (0u64, 0u64);
    let steps = sky.steps();
    for w in steps.windows(2) {
        let len = w[1].0.min(st.ctx.count).saturating_sub(w[0].0);
        busy_m += len * w[0].1;
        busy_r += len * w[0].2;
    }
    need_m + busy_m <= st.ctx.count * st.ctx.m && need_r + busy_r <= st.ctx.count * st.ctx.resource
}

/// All placements of `wide` jobs that end by the horizon and respect machine and resource
/// limits among themselves. Fails once more than `budget` placements exist.
pub fn enumerate_wide_placements(
    ctx: &GridContext,
    wide: &[GridJob],
    budget: u64,
) -> Result<Vec<BTreeMap<JobId, u64>>, LargeError> {
    let mut out = Vec::new();
    let flow = for_each_wide_placement(ctx, wide, budget, &mut |p| {
        out.push(p.clone());
        None::<()>
    })?;
    debug_assert!(flow.is_none());
    Ok(out)
}

/// Visits wide placements in lexicographic order of start indices until `f` returns `Some`.
pub fn for_each_wide_placement<A>(
    ctx: &GridContext,
    wide: &[GridJob],
    budget: u64,
    f: &mut dyn FnMut(&BTreeMap<JobId, u64>) -> Option<A>,
) -> Result<Option<A>, LargeError> {
    let jobs = ordered(wide);
    let mut usage = vec![(0u64, 0u64); ctx.count as usize];
    let mut current = BTreeMap::new();
    let mut visited = 0u64;
    wide_dfs(ctx, &jobs, 0, &mut usage, &mut current, &mut visited, budget, f)
}

#[allow(clippy::too_many_arguments)]
fn wide_dfs<A>(
    ctx: &GridContext,
    jobs: &[GridJob],
    idx: usize,
    usage: &mut Vec<(u64, u64)>,
    current: &mut BTreeMap<JobId, u64>,
    visited: &mut u64,
    budget: u64,
    f: &mut dyn FnMut(&BTreeMap<JobId, u64>) -> Option<A>,
) -> Result<Option<A>, LargeError> {
    if idx == jobs.len() {
        *visited += 1;
        if *visited > budget {
            return Err(LargeError::Budget(budget));
        }
        return Ok(f(current));
    }
    let job = &jobs[idx];
    let a = ctx.align(job);
    // identical consecutive jobs take non-decreasing starts
    let lo = match idx.checked_sub(1).map(|p| &jobs[p]) {
        Some(prev) if job_key(prev) == job_key(job) => current[&prev.id],
        _ => 0,
    };
    let mut s = lo.div_ceil(a) * a;
    while s + job.len <= ctx.count {
        let range = s as usize..(s + job.len) as usize;
        let fits = usage[range.clone()].iter().all(|&(m, r)| m < ctx.m && r + job.r <= ctx.resource);
        if fits {
            for u in &mut usage[range.clone()] {
                u.0 += 1;
                u.1 += job.r;
            }
            current.insert(job.id, s);
            let res = wide_dfs(ctx, jobs, idx + 1, usage, current, visited, budget, f);
            current.remove(&job.id);
            for u in &mut usage[range] {
                u.0 -= 1;
                u.1 -= job.r;
            }
            if let Some(v) = res? {
                return Ok(Some(v));
            }
        }
        s += a;
    }
    Ok(None)
}

/// Number of profiles over layers with the given residual `(machines, resource)`, saturating.
pub fn profile_count(m: u64, resource: u64, residual: &[(u64, u64)]) -> u64 {
    residual.iter().fold(1u64, |acc, &(mr, rr)| {
        let per = (mr + 1).saturating_mul(admissible_levels(m, resource, rr).len() as u64);
        acc.saturating_mul(per)
    })
}

/// Lazily enumerates all profiles, most permissive first (last layer varies fastest).
pub struct ProfileIter {
    choices: Vec<Vec<(u64, Option<u32>)>>,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for ProfileIter {
    type Item = Profile;

    fn next(&mut self) -> Option<Profile> {
        if self.done {
            return None;
        }
        let p = Profile {
            machines: self.odometer.iter().zip(&self.choices).map(|(&i, c)| c[i].0).collect(),
            levels: self.odometer.iter().zip(&self.choices).map(|(&i, c)| c[i].1).collect(),
        };
        let mut k = self.odometer.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.odometer[k] += 1;
            if self.odometer[k] < self.choices[k].len() {
                break;
            }
            self.odometer[k] = 0;
        }
        Some(p)
    }
}

/// Every profile for the residual capacities, most permissive first. Fails when there are
/// more than `budget`.
pub fn enumerate_profiles(m: u64, resource: u64, residual: &[(u64, u64)], budget: u64) -> Result<ProfileIter, LargeError> {
    let count = profile_count(m, resource, residual);
    if count > budget {
        return Err(LargeError::Budget(budget));
    }
    let choices = residual
        .iter()
        .map(|&(mr, rr)| {
            let levels = admissible_levels(m, resource, rr);
            (0..=mr).rev().flat_map(|k| levels.iter().map(move |&l| (k, l))).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    let odometer = vec![0; residual.len()];
    Ok(ProfileIter { choices, odometer, done: false })
}

fn permissive_profile(m: u64, resource: u64, residual: &[(u64, u64)]) -> Profile {
    Profile {
        machines: residual.iter().map(|r| r.0).collect(),
        levels: residual.iter().map(|&(_, rr)| admissible_levels(m, resource, rr)[0]).collect(),
    }
}

/// The level whose interval `(R/g^(t+1), R/g^t]` contains `usage`.
fn level_of_usage(m: u64, resource: u64, usage: u64) -> Option<u32> {
    if usage == 0 {
        return None;
    }
    let u = uint(usage);
    let g = growth(m);
    let mut t = 0;
    while level_value(m, resource, t) / &g >= u {
        t += 1;
    }
    Some(t)
}

/// Profiles tried when exact enumeration is too large: the most permissive one, one read
/// off a greedy grid schedule of the narrow jobs, and uniformly tightened versions of the
/// permissive one.
pub fn heuristic_profiles(ctx: &GridContext, narrow: &[GridJob], residual: &[(u64, u64)]) -> Vec<Profile> {
    let (m, big_r) = (ctx.m, ctx.resource);
    let mut out = vec![permissive_profile(m, big_r, residual)];
    let mut used = vec![(0u64, 0u64); residual.len()];
    for j in ordered(narrow) {
        let len = j.len as usize;
        let slot = (0..residual.len().saturating_sub(len - 1)).find(|&s| {
            (s..s + len).all(|l| used[l].0 < residual[l].0 && used[l].1 + j.r <= residual[l].1)
        });
        if let Some(s) = slot {
            for u in &mut used[s..s + len] {
                u.0 += 1;
                u.1 += j.r;
            }
        }
    }
    out.push(Profile {
        machines: used.iter().map(|u| u.0).collect(),
        levels: used.iter().map(|u| level_of_usage(m, big_r, u.1)).collect(),
    });
    for shift in 1..=3u32 {
        let mut p = permissive_profile(m, big_r, residual);
        for (l, &(_, rr)) in p.levels.iter_mut().zip(residual) {
            let levels = admissible_levels(m, big_r, rr);
            *l = levels[(shift as usize).min(levels.len() - 1)];
        }
        out.push(p);
    }
    out.dedup();
    out
}

/// LP over fractional start assignments of narrow jobs, with variable metadata.
pub struct LargeLp {
    pub model: LpModel,
    /// `(job, start index)` for each variable.
    pub vars: Vec<(JobId, u64)>,
}

/// Builds the placement LP: per-layer resource and machine rows bounded by the profile,
/// and one coverage row per job. A job with start `i` runs in layer `s` iff
/// `s - len < i <= s`.
pub fn build_lp_large(ctx: &GridContext, profile: &Profile, narrow: &[GridJob]) -> LargeLp {
    let count = ctx.count;
    let mut model = LpModel::new();
    let mut vars = Vec::new();
    let mut res_rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); count as usize];
    let mut mach_rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); count as usize];
    let mut cover_rows = Vec::new();
    for j in narrow {
        let mut cover = Vec::new();
        for i in 0..count {
            if i + j.len > count {
                break;
            }
            let v = model.add_var(format!("x_{}_{}", j.id, i));
            vars.push((j.id, i));
            cover.push((v, Rational::one()));
            for l in i..i + j.len {
                if j.r > 0 {
                    res_rows[l as usize].push((v, uint(j.r)));
                }
                mach_rows[l as usize].push((v, Rational::one()));
            }
        }
        cover_rows.push((j.id, cover));
    }
    for (s, row) in res_rows.into_iter().enumerate() {
        model.add_constraint(format!("res_{s}"), row, Relation::Le, profile.resource_bound(s, ctx.m, ctx.resource));
    }
    for (s, row) in mach_rows.into_iter().enumerate() {
        model.add_constraint(format!("mach_{s}"), row, Relation::Le, uint(profile.machines[s]));
    }
    for (id, row) in cover_rows {
        model.add_constraint(format!("cover_{id}"), row, Relation::Eq, int(1));
    }
    LargeLp { model, vars }
}

/// Jobs with a fractional assignment in `sol`.
pub fn fractional_jobs(lp: &LargeLp, sol: &BasicSolution) -> BTreeSet<JobId> {
    lp.vars
        .iter()
        .zip(&sol.values)
        .filter(|(_, v)| !v.is_zero() && !v.is_one())
        .map(|((id, _), _)| *id)
        .collect()
}

/// Turns a basic solution into an integral placement: fractional jobs are removed, then
/// each layer whose usage exceeds `R̂_s / (1 + 1/m)` loses its widest job.
pub fn prune_solution(
    ctx: &GridContext,
    lp: &LargeLp,
    sol: &BasicSolution,
    profile: &Profile,
    narrow: &[GridJob],
) -> Result<LargePlacement, LargeError> {
    let count = ctx.count;
    let frac = fractional_jobs(lp, sol);
    if frac.len() as u64 > 2 * count {
        return Err(LargeError::TooManyFractional { count: frac.len(), bound: 2 * count });
    }
    let mut removed = frac.clone();
    let mut starts = BTreeMap::new();
    for ((id, i), v) in lp.vars.iter().zip(&sol.values) {
        if v.is_one() && !frac.contains(id) {
            starts.insert(*id, *i);
        }
    }
    let by_id: BTreeMap<JobId, &GridJob> = narrow.iter().map(|j| (j.id, j)).collect();
    let g = growth(ctx.m);
    for s in 0..count {
        let bound = profile.resource_bound(s as usize, ctx.m, ctx.resource) / &g;
        let running: Vec<&GridJob> = starts
            .iter()
            .filter(|(id, &i)| i <= s && s < i + by_id[*id].len)
            .map(|(id, _)| by_id[id])
            .collect();
        let usage: u64 = running.iter().map(|j| j.r).sum();
        if uint(usage) <= bound {
            continue;
        }
        let widest = running
            .iter()
            .max_by(|a, b| a.r.cmp(&b.r).then(a.len.cmp(&b.len)).then(b.id.cmp(&a.id)))
            .expect("a layer over its bound runs some job");
        starts.remove(&widest.id);
        removed.insert(widest.id);
        if uint(usage - widest.r) > bound {
            return Err(LargeError::PruneFailed { layer: s });
        }
    }
    if removed.len() as u64 > 3 * count {
        return Err(LargeError::TooManyRemoved { count: removed.len(), bound: 3 * count });
    }
    Ok(LargePlacement { starts, removed, wide_starts: BTreeMap::new(), profile: Some(profile.clone()) })
}

fn lp_route<A>(
    ctx: &GridContext,
    jobs: &[GridJob],
    opts: &LargeOptions,
    accept: &mut impl FnMut(&LargePlacement) -> Option<A>,
    stats: &mut LargeStats,
) -> Result<Option<(LargePlacement, A)>, LargeError> {
    let alpha = choose_alpha(&ctx.gamma, ctx.count);
    let (mut wide, mut narrow) = split_wide_narrow(jobs, &alpha, ctx.resource);
    // huge jobs are always enumerated
    wide.extend(narrow.iter().filter(|j| j.huge).cloned());
    narrow.retain(|j| !j.huge);
    let mut evaluations = 0u64;
    let mut failure: Option<LargeError> = None;
    let visit = for_each_wide_placement(ctx, &wide, opts.node_budget, &mut |wide_starts| {
        if evaluations >= opts.guess_budget {
            stats.budget_hit = true;
            return Some(None);
        }
        let usage = layer_usage(&wide, wide_starts, ctx.count);
        let residual: Vec<(u64, u64)> = usage.iter().map(|&(m, r)| (ctx.m - m, ctx.resource - r)).collect();
        let profiles: Box<dyn Iterator<Item = Profile>> = match enumerate_profiles(ctx.m, ctx.resource, &residual, opts.profile_budget) {
            Ok(it) => Box::new(it),
            Err(_) => Box::new(heuristic_profiles(ctx, &narrow, &residual).into_iter()),
        };
        for (k, profile) in profiles.enumerate() {
            if evaluations >= opts.guess_budget {
                stats.budget_hit = true;
                return Some(None);
            }
            evaluations += 1;
            stats.profiles_tried += 1;
            let lp = build_lp_large(ctx, &profile, &narrow);
            stats.lp_solves += 1;
            let sol = match solve_feasible(&lp.model) {
                Ok(s) => s,
                // nothing is feasible under a tighter profile either
                Err(LpError::Infeasible) if k == 0 => return None,
                Err(LpError::Infeasible) => continue,
                Err(e) => {
                    failure = Some(e.into());
                    return Some(None);
                }
            };
            stats.max_fractional = stats.max_fractional.max(fractional_jobs(&lp, &sol).len());
            let mut placement = match prune_solution(ctx, &lp, &sol, &profile, &narrow) {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e);
                    return Some(None);
                }
            };
            for (id, s) in wide_starts {
                placement.starts.insert(*id, *s);
                placement.wide_starts.insert(*id, *s);
            }
            if let Some(a) = accept(&placement) {
                return Some(Some((placement, a)));
            }
        }
        None
    });
    if let Some(e) = failure {
        return Err(e);
    }
    match visit {
        Ok(found) => Ok(found.flatten()),
        Err(LargeError::Budget(_)) => {
            stats.budget_hit = true;
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn job(id: JobId, len: u64, r: u64) -> GridJob {
        GridJob { id, len, r, huge: false }
    }

    fn ctx(count: u64, m: u64, resource: u64) -> GridContext {
        GridContext { count, m, resource, gamma: int(1), huge_align: 1 }
    }

    #[test]
    fn split_threshold_is_inclusive() {
        let jobs = vec![job(0, 1, 1), job(1, 1, 2), job(2, 1, 4)];
        let (w, n) = split_wide_narrow(&jobs, &rat(1, 2), 4);
        assert_eq!(w.iter().map(|j| j.id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(n.len(), 1);
        let (w, _) = split_wide_narrow(&jobs, &int(1), 4);
        assert_eq!(w.len(), 1);
        let (w, _) = split_wide_narrow(&jobs, &rat(1, 1000), 10_000);
        assert!(w.is_empty());
    }

    #[test]
    fn alpha_formula() {
        assert_eq!(choose_alpha(&int(1), 4), rat(1, 13));
        assert_eq!(choose_alpha(&rat(1, 16), 4), rat(1, 208));
    }

    #[test]
    fn wide_placements() {
        let c = ctx(4, 2, 4);
        assert_eq!(enumerate_wide_placements(&c, &[], 10).unwrap().len(), 1);
        let one = enumerate_wide_placements(&c, &[job(0, 2, 3)], 10).unwrap();
        assert_eq!(one.len(), 3);
        // two jobs with r = 3 cannot overlap
        let two = enumerate_wide_placements(&c, &[job(0, 2, 3), job(1, 2, 3)], 100).unwrap();
        for p in &two {
            assert!(p[&0].abs_diff(p[&1]) >= 2);
        }
        assert!(matches!(enumerate_wide_placements(&c, &[job(0, 1, 1), job(1, 1, 1)], 2), Err(LargeError::Budget(2))));
    }

    #[test]
    fn huge_jobs_respect_alignment() {
        let c = GridContext { huge_align: 2, ..ctx(6, 1, 1) };
        let p = enumerate_wide_placements(&c, &[GridJob { id: 0, len: 4, r: 1, huge: true }], 10).unwrap();
        let starts: Vec<u64> = p.iter().map(|p| p[&0]).collect();
        assert_eq!(starts, vec![0, 2]);
    }

    #[test]
    fn profile_counts() {
        assert_eq!(max_level(2, 4), 4);
        assert_eq!(profile_count(2, 4, &[(2, 4)]), 15);
        assert_eq!(enumerate_profiles(2, 4, &[(2, 4)], 100).unwrap().count(), 15);
        assert_eq!(enumerate_profiles(2, 4, &[(0, 0)], 100).unwrap().collect::<Vec<_>>(), vec![Profile {
            machines: vec![0],
            levels: vec![None]
        }]);
        assert_eq!(admissible_levels(3, 1, 1), vec![Some(0), None]);
        assert!(matches!(enumerate_profiles(2, 4, &[(2, 4), (2, 4)], 100), Err(LargeError::Budget(100))));
    }

    #[test]
    fn first_profile_is_most_permissive() {
        let p = enumerate_profiles(2, 4, &[(1, 2), (2, 4)], 1000).unwrap().next().unwrap();
        assert_eq!(p.machines, vec![1, 2]);
        // level 1 is 8/3, admissible since 16/9 < 2
        assert_eq!(p.levels, vec![Some(1), Some(0)]);
    }

    fn single_lp_profile(count: usize, m: u64, level: Option<u32>) -> Profile {
        Profile { machines: vec![m; count], levels: vec![level; count] }
    }

    #[test]
    fn lp_single_job() {
        let c = ctx(1, 1, 2);
        let lp = build_lp_large(&c, &single_lp_profile(1, 1, Some(0)), &[job(0, 1, 1)]);
        assert_eq!(lp.model.num_vars(), 1);
        let sol = solve_feasible(&lp.model).unwrap();
        assert_eq!(sol.values, vec![int(1)]);
    }

    #[test]
    fn lp_two_full_jobs_one_per_layer() {
        let c = ctx(2, 1, 3);
        let jobs = [job(0, 1, 3), job(1, 1, 3)];
        let lp = build_lp_large(&c, &single_lp_profile(2, 1, Some(0)), &jobs);
        let sol = solve_feasible(&lp.model).unwrap();
        let mut placed: Vec<(JobId, u64)> =
            lp.vars.iter().zip(&sol.values).filter(|(_, v)| v.is_one()).map(|(k, _)| *k).collect();
        placed.sort();
        assert!(placed == vec![(0, 0), (1, 1)] || placed == vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn lp_zero_profile_is_infeasible() {
        let c = ctx(2, 1, 3);
        let lp = build_lp_large(&c, &single_lp_profile(2, 1, None), &[job(0, 1, 1)]);
        assert_eq!(solve_feasible(&lp.model), Err(LpError::Infeasible));
    }

    #[test]
    fn prune_keeps_integral_solution() {
        let c = ctx(2, 2, 4);
        let jobs = [job(0, 1, 1), job(1, 1, 1)];
        let profile = single_lp_profile(2, 2, Some(0));
        let lp = build_lp_large(&c, &profile, &jobs);
        let mut values = vec![Rational::zero(); lp.vars.len()];
        values[0] = int(1); // job 0 at 0
        values[2] = int(1); // job 1 at 0
        let sol = BasicSolution { values, basis: vec![], objective: int(0), duals: vec![] };
        let p = prune_solution(&c, &lp, &sol, &profile, &jobs).unwrap();
        assert!(p.removed.is_empty());
        assert_eq!(p.starts.len(), 2);
    }

    #[test]
    fn prune_removes_fractional_job() {
        let c = ctx(2, 2, 4);
        let jobs = [job(0, 1, 1), job(1, 1, 1)];
        let profile = single_lp_profile(2, 2, Some(0));
        let lp = build_lp_large(&c, &profile, &jobs);
        let values = vec![rat(1, 2), rat(1, 2), int(1), int(0)];
        let sol = BasicSolution { values, basis: vec![], objective: int(0), duals: vec![] };
        let p = prune_solution(&c, &lp, &sol, &profile, &jobs).unwrap();
        assert_eq!(p.removed, BTreeSet::from([0]));
        assert_eq!(p.starts, BTreeMap::from([(1, 0)]));
    }

    #[test]
    fn prune_removes_widest_in_tight_layer() {
        // m = 1, R = 4: level 0 gives bound 4/2 = 2 after pruning, so a job with r = 3 goes
        let c = ctx(1, 1, 4);
        let jobs = [job(0, 1, 3)];
        let profile = single_lp_profile(1, 1, Some(0));
        let lp = build_lp_large(&c, &profile, &jobs);
        let sol = solve_feasible(&lp.model).unwrap();
        let p = prune_solution(&c, &lp, &sol, &profile, &jobs).unwrap();
        assert_eq!(p.removed, BTreeSet::from([0]));
    }

    #[test]
    fn enumeration_route_finds_first_fit() {
        let c = ctx(4, 1, 2);
        let jobs = [job(0, 2, 1), job(1, 2, 1)];
        let out = place_large(&c, &jobs, &LargeOptions::default(), |_| Some(())).unwrap();
        let (p, ()) = out.found.unwrap();
        assert!(out.stats.enumerated);
        let mut s: Vec<u64> = p.starts.values().copied().collect();
        s.sort();
        assert_eq!(s, vec![0, 2]);
        assert!(p.removed.is_empty());
    }

    #[test]
    fn enumeration_route_respects_horizon() {
        let c = ctx(3, 1, 2);
        let jobs = [job(0, 2, 1), job(1, 2, 1)];
        let out = place_large(&c, &jobs, &LargeOptions::default(), |_| Some(())).unwrap();
        assert!(out.found.is_none());
    }

    #[test]
    fn enumeration_budget_counts_as_failure() {
        let c = ctx(8, 2, 4);
        let jobs = [job(0, 1, 1), job(1, 2, 1), job(2, 3, 1)];
        let opts = LargeOptions { guess_budget: 2, ..LargeOptions::default() };
        let out = place_large(&c, &jobs, &opts, |_| None::<()>).unwrap();
        assert!(out.found.is_none());
        assert!(out.stats.budget_hit);
        assert_eq!(out.stats.leaves, 2);
    }

    #[test]
    fn lp_route_places_everything_or_prunes() {
        let c = GridContext { gamma: int(1), ..ctx(4, 3, 6) };
        let jobs = [job(0, 2, 1), job(1, 2, 1), job(2, 1, 4), job(3, 3, 2)];
        let opts = LargeOptions { mode: LargeMode::Lp, ..LargeOptions::default() };
        let out = place_large(&c, &jobs, &opts, |_| Some(())).unwrap();
        let (p, ()) = out.found.unwrap();
        assert_eq!(p.starts.len() + p.removed.len(), jobs.len());
        let placed: Vec<GridJob> = jobs.iter().filter(|j| !p.removed.contains(&j.id)).cloned().collect();
        for (mm, rr) in layer_usage(&placed, &p.starts, c.count) {
            assert!(mm <= c.m && rr <= c.resource);
        }
    }
}
