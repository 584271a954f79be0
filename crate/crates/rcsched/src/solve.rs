//! Pieces shared by the two approximation drivers: options, horizon search, results and
//! certificate checking.

use crate::assemble::{compact, Part};
use crate::baseline::greedy_bound_jobs;
use crate::large::{GridJob, LargeError, LargeOptions, LargeStats};
use crate::model::{lower_bound_t, makespan, verify_schedule, Instance, Job, JobId, Schedule};
use crate::rational::{int, inverse_integer, to_u64_exact, uint, Rational};
use crate::simplify::{normalize_epsilon, simplify, SimplifyError, Simplified};
use crate::small::SmallStats;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Knobs shared by both drivers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub large: LargeOptions,
    /// Run the left-compaction pass on the assembled schedule.
    pub compact: bool,
    /// Three-halves only: insert removed jobs into a shifted gap even when there are few
    /// huge jobs, instead of stacking them on top.
    pub shift_always: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { large: LargeOptions::default(), compact: true, shift_always: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("instance has no jobs")]
    Empty,
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error("no horizon in the search range produced a schedule within the search budget")]
    Budget,
    #[error("no horizon in the search range produced a schedule")]
    NoHorizon,
}

/// One probed horizon `T' = l * eps * T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub l: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub t_prime: Rational,
    pub ok: bool,
    pub budget_hit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Free capacity found over a gap of the shifted skeleton.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapScan {
    pub ok: bool,
    pub min_free_machines: u64,
    pub min_free_resource: u64,
}

/// Where the removed long jobs went in the three-halves driver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapPlacement {
    /// Which construction produced the gap.
    pub case: String,
    pub start_layer: u64,
    pub layers: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub start: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub length: Rational,
    /// Free machines required throughout the gap.
    pub k: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub gamma: Rational,
    pub jobs: Vec<JobId>,
    pub scan: GapScan,
    /// Per-layer skeleton usage over the gap, without the removed jobs.
    pub usage: Vec<(u64, u64)>,
}

/// Everything needed to re-check a driver's output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub algo: String,
    #[serde(with = "crate::rational::serde_q")]
    pub eps: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub t: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub t_prime: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub delta: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub mu: Rational,
    pub gap_index: u32,
    /// Skeleton layers (horizon plus any gap extension).
    pub layers: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub step: Rational,
    pub parts: Vec<Part>,
    #[serde(with = "crate::rational::serde_q")]
    pub parts_sum: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub layout_makespan: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub makespan: Rational,
    /// Largest amount a long job was lengthened by rounding.
    #[serde(with = "crate::rational::serde_q")]
    pub rounding_slack: Rational,
    pub large: LargeStatsRecord,
    pub small: Option<SmallStats>,
    pub attempts: Vec<Attempt>,
    pub gap: Option<GapPlacement>,
    pub cases_tried: BTreeMap<String, u64>,
}

/// Serializable copy of [`LargeStats`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeStatsRecord {
    pub enumerated: bool,
    pub nodes: u64,
    pub leaves: u64,
    pub lp_solves: u64,
    pub profiles_tried: u64,
    pub max_fractional: usize,
    pub removed: usize,
}

impl LargeStatsRecord {
    pub fn from_stats(s: &LargeStats, removed: usize) -> Self {
        LargeStatsRecord {
            enumerated: s.enumerated,
            nodes: s.nodes,
            leaves: s.leaves,
            lp_solves: s.lp_solves,
            profiles_tried: s.profiles_tried,
            max_fractional: s.max_fractional,
            removed,
        }
    }
}

/// Schedule produced by a driver, the uncompacted layout and its certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub schedule: Schedule,
    pub layout: Schedule,
    pub certificate: Certificate,
}

impl SolveResult {
    pub fn makespan(&self) -> &Rational {
        &self.certificate.makespan
    }
}

/// Simplified instance plus the grid data both drivers need.
pub(crate) struct Prepared {
    pub eps: Rational,
    pub s: Simplified,
    pub step: Rational,
    /// Layers per unit of `l`: `T' / step = l * per_l`.
    pub per_l: u64,
    pub inv_eps: u64,
    pub small: Vec<Job>,
    pub large: Vec<(Job, u64)>,
}

impl Prepared {
    pub fn new(inst: &Instance, eps: &Rational) -> Result<Self, SolveError> {
        if inst.jobs.is_empty() {
            return Err(SolveError::Empty);
        }
        let eps = normalize_epsilon(eps)?;
        let s = simplify(inst, &eps)?;
        let step = &eps * &s.gap.delta * &s.t;
        let per_l = inverse_integer(&s.gap.delta).expect("delta is a unit fraction");
        let inv_eps = inverse_integer(&eps).expect("normalized");
        let small = inst.jobs.iter().filter(|j| s.classes.small.contains(&j.id)).cloned().collect();
        let large = inst
            .jobs
            .iter()
            .filter(|j| s.classes.large.contains(&j.id))
            .map(|j| {
                let len = to_u64_exact(&(&s.rounded[&j.id].p / &step)).expect("rounded lengths lie on the grid");
                (j.clone(), len)
            })
            .collect();
        Ok(Prepared { eps, s, step, per_l, inv_eps, small, large })
    }

    pub fn t_prime(&self, l: u64) -> Rational {
        uint(l) * &self.eps * &self.s.t
    }

    pub fn l_range(&self) -> (u64, u64) {
        (self.inv_eps, 16 * self.inv_eps)
    }

    pub fn grid_jobs(&self, huge: &BTreeSet<JobId>) -> Vec<GridJob> {
        self.large
            .iter()
            .map(|(j, len)| GridJob { id: j.id, len: *len, r: j.r, huge: huge.contains(&j.id) })
            .collect()
    }

    pub fn rounding_slack(&self) -> Rational {
        self.large
            .iter()
            .map(|(j, _)| &self.s.rounded[&j.id].p - &j.p)
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Outcome of a single horizon probe.
pub(crate) struct Probe<B> {
    pub built: Option<B>,
    pub budget_hit: bool,
    pub note: Option<String>,
}

impl<B> Probe<B> {
    pub fn from_large_error(e: LargeError) -> Self {
        Probe { built: None, budget_hit: matches!(e, LargeError::Budget(_)), note: Some(e.to_string()) }
    }
}

/// Probes the top of `[lo, hi]`, then binary searches for the smallest successful `l`.
/// Among all successful probes the one with the smallest key wins.
pub(crate) fn search_horizon<B, K: Ord>(
    prep: &Prepared,
    mut run: impl FnMut(u64) -> Probe<B>,
    key: impl Fn(&B) -> K,
) -> Result<(B, Vec<Attempt>), SolveError> {
    let (mut lo, mut hi) = prep.l_range();
    let mut attempts = Vec::new();
    let mut best: Option<(K, u64, B)> = None;
    let mut any_budget = false;
    let mut probe = |l: u64, attempts: &mut Vec<Attempt>, best: &mut Option<(K, u64, B)>| -> bool {
        let p = run(l);
        any_budget |= p.budget_hit;
        let ok = p.built.is_some();
        attempts.push(Attempt { l, t_prime: prep.t_prime(l), ok, budget_hit: p.budget_hit, note: p.note });
        if let Some(b) = p.built {
            let k = key(&b);
            let better = match best {
                Some((bk, bl, _)) => (&k, l) < (&*bk, *bl),
                None => true,
            };
            if better {
                *best = Some((k, l, b));
            }
        }
        ok
    };
    if !probe(hi, &mut attempts, &mut best) {
        return Err(if any_budget { SolveError::Budget } else { SolveError::NoHorizon });
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, &mut attempts, &mut best) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (_, _, b) = best.expect("the top probe succeeded");
    Ok((b, attempts))
}

/// Compacts (if enabled) and fills in the makespan fields.
pub(crate) fn finish(
    inst: &Instance,
    opts: &SolverOptions,
    layout: Schedule,
    mut certificate: Certificate,
) -> SolveResult {
    let schedule = if opts.compact { compact(inst, &layout) } else { layout.clone() };
    certificate.parts_sum = certificate.parts.iter().map(Part::length).sum();
    certificate.layout_makespan = makespan(inst, &layout).expect("layout covers the instance");
    certificate.makespan = makespan(inst, &schedule).expect("schedule covers the instance");
    SolveResult { schedule, layout, certificate }
}

/// One line of a certificate check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// All checks of [`certify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertReport {
    pub checks: Vec<Check>,
}

impl CertReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }

    fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), ok, detail: detail.into() });
    }
}

/// Half of `t_prime` rounded up to the grid.
pub fn half_on_grid(t_prime: &Rational, step: &Rational) -> Rational {
    let q = t_prime / (int(2) * step);
    Rational::from_integer(q.ceil().to_integer()) * step
}

/// Re-derives every block bound from the instance and checks the result against it.
pub fn certify(result: &SolveResult, inst: &Instance, eps: &Rational) -> CertReport {
    let c = &result.certificate;
    let mut rep = CertReport { checks: Vec::new() };

    match verify_schedule(inst, &result.schedule) {
        Ok(v) => rep.push(
            "schedule feasible",
            v.feasible,
            v.first_violation.map(|x| x.to_string()).unwrap_or_default(),
        ),
        Err(e) => rep.push("schedule feasible", false, e.to_string()),
    }
    match verify_schedule(inst, &result.layout) {
        Ok(v) => rep.push("layout feasible", v.feasible, v.first_violation.map(|x| x.to_string()).unwrap_or_default()),
        Err(e) => rep.push("layout feasible", false, e.to_string()),
    }
    let later: Vec<JobId> = result
        .schedule
        .starts
        .iter()
        .filter(|(id, s)| result.layout.start(**id).map(|l| *s > l).unwrap_or(true))
        .map(|(id, _)| *id)
        .collect();
    rep.push("compaction only moves jobs earlier", later.is_empty(), format!("{later:?}"));

    let norm = normalize_epsilon(eps).ok();
    rep.push("epsilon", norm.as_ref() == Some(&c.eps), format!("certificate {}", q(&c.eps)));
    let t = lower_bound_t(inst);
    rep.push("scale T", t == c.t, format!("expected {}, certificate {}", q(&t), q(&c.t)));
    let step = &c.eps * &c.delta * &t;
    rep.push("layer length", step == c.step, format!("expected {}", q(&step)));
    let span = uint(c.layers) * &c.step;
    let span_limit = &c.t_prime + half_on_grid(&c.t_prime, &c.step);
    let span_ok = if c.algo == "aptas" { span == c.t_prime } else { span <= span_limit };
    rep.push("layer count", span_ok, format!("{} layers of {}", c.layers, q(&c.step)));

    let map = inst.job_map();
    let mut seen: BTreeMap<JobId, usize> = BTreeMap::new();
    for p in &c.parts {
        for id in &p.jobs {
            *seen.entry(*id).or_default() += 1;
        }
    }
    let cover_ok = inst.jobs.iter().all(|j| seen.get(&j.id) == Some(&1)) && seen.len() == inst.jobs.len();
    rep.push("blocks cover every job once", cover_ok, "");

    let mut at = Rational::zero();
    let mut contiguous = true;
    for p in &c.parts {
        contiguous &= p.start == at && p.end >= p.start;
        at = p.end.clone();
    }
    rep.push("blocks are contiguous", contiguous, "");

    let one = Rational::one();
    for p in &c.parts {
        let inside = p.jobs.iter().all(|id| match (result.layout.start(*id), map.get(id)) {
            (Some(s), Some(j)) => s >= &p.start && s + &j.p <= p.end,
            _ => false,
        });
        rep.push(format!("{} jobs inside block", p.label), inside, "");
        let jobs: Vec<Job> = p.jobs.iter().filter_map(|id| map.get(id).map(|j| (*j).clone())).collect();
        let (bound, what) = match p.label.as_str() {
            "layers" => ((&one + &c.eps) * &span, "(1 + eps) times the skeleton span"),
            "extra" => ((&one + &c.eps) * int(3) * &c.eps * &t, "(1 + eps) 3 eps T"),
            "end" | "tail" => (greedy_bound_jobs(&jobs, inst.m, inst.resource), "list-scheduling bound of its jobs"),
            "top" if c.algo == "aptas" => (inst.p_max(), "removed-job block exceeds p_max"),
            "top" => (&c.t_prime / int(2), "removed-job block exceeds T'/2"),
            "medium" => (int(4) * &c.eps * &t, "medium block exceeds 4 eps T"),
            _ => (Rational::zero(), "unknown block"),
        };
        let len = p.length();
        rep.push(
            format!("{} block within bound", p.label),
            len <= bound,
            format!("{what}: length {} bound {}", q(&len), q(&bound)),
        );
    }
    if c.algo != "aptas" {
        let half = &c.t_prime / int(2);
        let removed_ok = c
            .parts
            .iter()
            .filter(|p| p.label == "top")
            .flat_map(|p| p.jobs.iter())
            .chain(c.gap.iter().flat_map(|g| g.jobs.iter()))
            .filter_map(|id| map.get(id))
            .all(|j| j.p <= half);
        rep.push("removed jobs are at most T'/2 long", removed_ok, "");
    }
    if let Some(g) = &c.gap {
        let recomputed = scan_gap(&g.usage, inst.m, inst.resource, g.k, &g.gamma);
        rep.push(
            "gap has k free machines and gamma R free resource",
            recomputed.ok && recomputed == g.scan,
            format!("min free machines {} resource {}", recomputed.min_free_machines, recomputed.min_free_resource),
        );
        let jobs: Vec<&Job> = g.jobs.iter().filter_map(|id| map.get(id).copied()).collect();
        let fits = jobs.len() as u64 <= g.k
            && uint(jobs.iter().map(|j| j.r).sum::<u64>()) <= &g.gamma * uint(inst.resource)
            && jobs.iter().all(|j| j.p <= g.length);
        rep.push("removed jobs fit the gap", fits, "");
    }

    let ms = makespan(inst, &result.schedule).ok();
    rep.push("makespan matches", ms.as_ref() == Some(&c.makespan), format!("certificate {}", q(&c.makespan)));
    let sum: Rational = c.parts.iter().map(Part::length).sum();
    rep.push(
        "makespan at most the sum of blocks",
        c.makespan <= sum && c.layout_makespan <= sum && sum == c.parts_sum,
        format!("makespan {} blocks {}", q(&c.makespan), q(&sum)),
    );
    rep
}

fn q(x: &Rational) -> String {
    crate::rational::Short(x).to_string()
}

/// Minimum free capacity over the given per-layer usage; ok when at least `k` machines and
/// `gamma R` resource stay free everywhere.
pub fn scan_gap(usage: &[(u64, u64)], m: u64, resource: u64, k: u64, gamma: &Rational) -> GapScan {
    let min_free_machines = usage.iter().map(|u| m.saturating_sub(u.0)).min().unwrap_or(m);
    let min_free_resource = usage.iter().map(|u| resource.saturating_sub(u.1)).min().unwrap_or(resource);
    let ok = min_free_machines >= k && uint(min_free_resource) >= gamma * uint(resource);
    GapScan { ok, min_free_machines, min_free_resource }
}
