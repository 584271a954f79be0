//! Instance simplification: medium-gap selection, job classes, rounding of long jobs and the
//! start-point grid.

use crate::baseline::list_schedule_jobs;
use crate::model::{area, total_p, Instance, Job, JobId, Schedule};
use crate::rational::{ceil_int, int, inverse_integer, pow, serde_q, uint, Rational};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Errors from this module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimplifyError {
    #[error("1/eps must be a positive integer")]
    BadEpsilon,
    #[error("job {0} is longer than the scale T")]
    LongerThanScale(JobId),
    #[error("job {0} is shorter than the large-job threshold")]
    BelowThreshold(JobId),
    #[error("layer step does not divide the horizon")]
    NotDivisible,
}

/// `1/eps` as an integer, rounding eps down to the next unit fraction if needed.
pub fn normalize_epsilon(eps: &Rational) -> Result<Rational, SimplifyError> {
    if eps <= &Rational::zero() || eps >= &int(1) {
        return Err(SimplifyError::BadEpsilon);
    }
    let k = ceil_int(&eps.recip());
    Ok(Rational::new(BigInt::from(1), k))
}

fn inv_eps(eps: &Rational) -> Result<u64, SimplifyError> {
    inverse_integer(eps).ok_or(SimplifyError::BadEpsilon)
}

/// Thresholds separating long, medium and short jobs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapParams {
    #[serde(with = "serde_q")]
    pub epsilon: Rational,
    /// Long jobs have `p >= delta * T`.
    #[serde(with = "serde_q")]
    pub delta: Rational,
    /// Short jobs have `p < mu * T`.
    #[serde(with = "serde_q")]
    pub mu: Rational,
    pub gap_index: u32,
}

impl GapParams {
    /// `log_eps(delta)`, i.e. the exponent `d` with `delta = eps^d`.
    pub fn delta_exponent(&self) -> u32 {
        4 * self.gap_index - 3
    }
}

/// `gamma_i = eps^(1 + 4i)`.
pub fn gamma(eps: &Rational, i: u32) -> Rational {
    pow(eps, 1 + 4 * i)
}

/// `(1/m) p(J) + (2/R) area(J)` for a job set.
pub fn weight(jobs: &[Job], m: u64, cap: u64) -> Rational {
    total_p(jobs) / uint(m) + area(jobs) * int(2) / uint(cap)
}

/// Picks the smallest `i` in `1..=1/eps` whose band `[gamma_i T, gamma_{i-1} T)` carries at
/// most an `eps` fraction of the total weight.
pub fn select_medium_gap(inst: &Instance, eps: &Rational, t: &Rational) -> Result<GapParams, SimplifyError> {
    let k = inv_eps(eps)? as u32;
    // bucket each job by band index
    let mut bands: Vec<Vec<Job>> = vec![Vec::new(); k as usize + 1];
    let bounds: Vec<Rational> = (0..=k).map(|i| gamma(eps, i) * t).collect();
    for j in &inst.jobs {
        // band i holds p in [bounds[i], bounds[i-1])
        for i in 1..=k as usize {
            if j.p >= bounds[i] && j.p < bounds[i - 1] {
                bands[i].push(j.clone());
                break;
            }
        }
    }
    let total = weight(&inst.jobs, inst.m, inst.resource) * eps;
    for i in 1..=k {
        if weight(&bands[i as usize], inst.m, inst.resource) <= total {
            return Ok(GapParams {
                epsilon: eps.clone(),
                delta: gamma(eps, i - 1),
                mu: gamma(eps, i),
                gap_index: i,
            });
        }
    }
    unreachable!("the bands are disjoint, so one of the 1/eps bands is light")
}

/// Partition of the jobs by length.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub large: BTreeSet<JobId>,
    pub medium: BTreeSet<JobId>,
    pub small: BTreeSet<JobId>,
    /// Only populated in the three-halves mode; disjoint from `large`.
    pub huge: BTreeSet<JobId>,
}

/// Splits jobs into large (`p >= delta T`), small (`p < mu T`) and medium.
pub fn classify(inst: &Instance, gap: &GapParams, t: &Rational) -> Classification {
    let lo = &gap.mu * t;
    let hi = &gap.delta * t;
    let mut c = Classification::default();
    for j in &inst.jobs {
        if j.p >= hi {
            c.large.insert(j.id);
        } else if j.p < lo {
            c.small.insert(j.id);
        } else {
            c.medium.insert(j.id);
        }
    }
    c
}

/// Moves large jobs longer than `t_prime / 2` into the huge set.
pub fn carve_huge(c: &mut Classification, inst: &Instance, t_prime: &Rational) {
    let half = t_prime / int(2);
    let huge: Vec<JobId> = c
        .large
        .iter()
        .copied()
        .filter(|id| inst.job(*id).map(|j| j.p > half).unwrap_or(false))
        .collect();
    for id in huge {
        c.large.remove(&id);
        c.huge.insert(id);
    }
}

/// List schedule of the medium jobs starting at time 0.
pub fn schedule_medium(inst: &Instance, medium: &BTreeSet<JobId>) -> Schedule {
    let jobs: Vec<Job> = inst.jobs.iter().filter(|j| medium.contains(&j.id)).cloned().collect();
    list_schedule_jobs(&jobs, inst.m, inst.resource)
}

/// A long job with its processing time rounded up to `k * eps^(l+1) * T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundedJob {
    pub id: JobId,
    #[serde(with = "serde_q")]
    pub p: Rational,
    pub r: u64,
    pub level: u32,
    pub k: u64,
}

/// Rounds each job with `p` in `[eps^l T, eps^(l-1) T)` up to the next multiple of
/// `eps^(l+1) T`.
pub fn round_large(jobs: &[Job], eps: &Rational, t: &Rational) -> Result<Vec<RoundedJob>, SimplifyError> {
    inv_eps(eps)?;
    jobs.iter().map(|j| round_one(j, eps, t)).collect()
}

fn round_one(j: &Job, eps: &Rational, t: &Rational) -> Result<RoundedJob, SimplifyError> {
    if &j.p > t {
        return Err(SimplifyError::LongerThanScale(j.id));
    }
    let mut level = 0u32;
    let mut lo = t.clone();
    while j.p < lo {
        level += 1;
        lo *= eps;
    }
    let unit = &lo * eps;
    let k = ceil_int(&(&j.p / &unit));
    let p = Rational::from_integer(k.clone()) * &unit;
    Ok(RoundedJob { id: j.id, p, r: j.r, level, k: k.to_u64().expect("k is at most 1/eps^2") })
}

/// Upper bound on the number of distinct rounded lengths of jobs with `p >= delta T`:
/// `log_eps(delta) * (1/eps^2 - 1/eps)` values below `T`, plus `T` itself.
pub fn distinct_rounded_bound(gap: &GapParams) -> u64 {
    let k = inverse_integer(&gap.epsilon).expect("unit fraction");
    u64::from(gap.delta_exponent()) * (k * k - k) + 1
}

/// Grid of candidate start times for long jobs: multiples of `step` below `T'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerGrid {
    #[serde(with = "serde_q")]
    pub t_prime: Rational,
    #[serde(with = "serde_q")]
    pub step: Rational,
    /// `|S|`, the number of start points (and layers).
    pub count: u64,
}

impl LayerGrid {
    pub fn start_point(&self, i: u64) -> Rational {
        uint(i) * &self.step
    }

    pub fn start_points(&self) -> Vec<Rational> {
        (0..self.count).map(|i| self.start_point(i)).collect()
    }
}

/// Builds `S = {0, eps delta T, 2 eps delta T, ...} ∩ [0, T')`.
pub fn build_layers(
    t_prime: &Rational,
    eps: &Rational,
    delta: &Rational,
    t: &Rational,
) -> Result<LayerGrid, SimplifyError> {
    let step = eps * delta * t;
    let q = t_prime / &step;
    if !q.is_integer() {
        return Err(SimplifyError::NotDivisible);
    }
    let count = q.to_integer().to_u64().ok_or(SimplifyError::NotDivisible)?;
    Ok(LayerGrid { t_prime: t_prime.clone(), step, count })
}

/// Everything the drivers need from the simplification step.
#[derive(Clone, Debug)]
pub struct Simplified {
    pub eps: Rational,
    pub t: Rational,
    pub gap: GapParams,
    pub classes: Classification,
    /// Rounded large jobs by id.
    pub rounded: BTreeMap<JobId, RoundedJob>,
}

/// Runs gap selection, classification and rounding.
pub fn simplify(inst: &Instance, eps: &Rational) -> Result<Simplified, SimplifyError> {
    let t = crate::model::lower_bound_t(inst);
    let gap = select_medium_gap(inst, eps, &t)?;
    let classes = classify(inst, &gap, &t);
    let large: Vec<Job> = inst.jobs.iter().filter(|j| classes.large.contains(&j.id)).cloned().collect();
    let rounded = round_large(&large, eps, &t)?.into_iter().map(|r| (r.id, r)).collect();
    Ok(Simplified { eps: eps.clone(), t, gap, classes, rounded })
}
