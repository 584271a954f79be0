//! Instances, schedules, feasibility verification and the basic lower bound.

use crate::rational::{serde_q, serde_q_map, uint, Rational, Short};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Job identifier.
pub type JobId = u64;

/// A job needs one machine and `r` resource units for `p` time units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    #[serde(with = "serde_q")]
    pub p: Rational,
    pub r: u64,
}

impl Job {
    pub fn new(id: JobId, p: Rational, r: u64) -> Self {
        Job { id, p, r }
    }

    pub fn area(&self) -> Rational {
        &self.p * uint(self.r)
    }
}

/// Errors raised while building or checking instances and schedules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("machine count must be positive")]
    NoMachines,
    #[error("resource size must be positive")]
    NoResource,
    #[error("job {0} has non-positive processing time")]
    NonPositiveTime(JobId),
    #[error("job {id} needs {r} resource units but only {capacity} exist")]
    ResourceTooLarge { id: JobId, r: u64, capacity: u64 },
    #[error("duplicate job id {0}")]
    DuplicateId(JobId),
    #[error("schedule has no start time for job {0}")]
    IncompleteSchedule(JobId),
    #[error("schedule assigns a start time to unknown job {0}")]
    UnknownJob(JobId),
    #[error("job {0} starts before time 0")]
    NegativeStart(JobId),
}

/// `m` identical machines, a renewable resource of size `R` and a job list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Instance {
    pub m: u64,
    #[serde(rename = "R")]
    pub resource: u64,
    pub jobs: Vec<Job>,
}

#[derive(Deserialize)]
struct RawInstance {
    m: u64,
    #[serde(rename = "R")]
    resource: u64,
    jobs: Vec<Job>,
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawInstance::deserialize(d)?;
        Instance::new(raw.m, raw.resource, raw.jobs).map_err(serde::de::Error::custom)
    }
}

impl Instance {
    /// Validates and builds an instance.
    pub fn new(m: u64, resource: u64, jobs: Vec<Job>) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::NoMachines);
        }
        if resource == 0 {
            return Err(ModelError::NoResource);
        }
        let mut seen = BTreeSet::new();
        for j in &jobs {
            if !j.p.is_positive() {
                return Err(ModelError::NonPositiveTime(j.id));
            }
            if j.r > resource {
                return Err(ModelError::ResourceTooLarge { id: j.id, r: j.r, capacity: resource });
            }
            if !seen.insert(j.id) {
                return Err(ModelError::DuplicateId(j.id));
            }
        }
        Ok(Instance { m, resource, jobs })
    }

    /// Convenience constructor from `(p, r)` pairs with ids `0..n`.
    pub fn from_pairs(m: u64, resource: u64, pairs: &[(Rational, u64)]) -> Result<Self, ModelError> {
        let jobs = pairs
            .iter()
            .enumerate()
            .map(|(i, (p, r))| Job::new(i as JobId, p.clone(), *r))
            .collect();
        Instance::new(m, resource, jobs)
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// Map from id to job, for repeated lookups.
    pub fn job_map(&self) -> BTreeMap<JobId, &Job> {
        self.jobs.iter().map(|j| (j.id, j)).collect()
    }

    pub fn total_p(&self) -> Rational {
        total_p(&self.jobs)
    }

    pub fn p_max(&self) -> Rational {
        p_max(&self.jobs)
    }

    pub fn area(&self) -> Rational {
        area(&self.jobs)
    }

    /// The instance restricted to the given ids (same machines and resource).
    pub fn restrict(&self, ids: &BTreeSet<JobId>) -> Instance {
        Instance {
            m: self.m,
            resource: self.resource,
            jobs: self.jobs.iter().filter(|j| ids.contains(&j.id)).cloned().collect(),
        }
    }
}

/// Sum of `r * p` over the jobs.
pub fn area(jobs: &[Job]) -> Rational {
    jobs.iter().fold(Rational::zero(), |acc, j| acc + j.area())
}

/// Sum of processing times.
pub fn total_p(jobs: &[Job]) -> Rational {
    jobs.iter().fold(Rational::zero(), |acc, j| acc + &j.p)
}

/// Largest processing time, 0 for no jobs.
pub fn p_max(jobs: &[Job]) -> Rational {
    jobs.iter().map(|j| j.p.clone()).max().unwrap_or_else(Rational::zero)
}

/// Sum of resource requirements.
pub fn total_r(jobs: &[Job]) -> u64 {
    jobs.iter().map(|j| j.r).sum()
}

/// Lower bound on the optimal makespan: `max{p_max, area/R, p(J)/m}` (0 for no jobs).
pub fn lower_bound_t(inst: &Instance) -> Rational {
    if inst.jobs.is_empty() {
        return Rational::zero();
    }
    let a = inst.area() / uint(inst.resource);
    let b = inst.total_p() / uint(inst.m);
    let c = inst.p_max();
    a.max(b).max(c)
}

/// Start times keyed by job id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(with = "serde_q_map")]
    pub starts: BTreeMap<JobId, Rational>,
}

impl Schedule {
    pub fn new() -> Self {
        Schedule::default()
    }

    pub fn insert(&mut self, id: JobId, start: Rational) {
        self.starts.insert(id, start);
    }

    pub fn start(&self, id: JobId) -> Option<&Rational> {
        self.starts.get(&id)
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Copies every start of `other`, shifted by `offset`, into `self`.
    pub fn absorb(&mut self, other: &Schedule, offset: &Rational) {
        for (id, s) in &other.starts {
            self.starts.insert(*id, s + offset);
        }
    }

    /// Latest completion among the scheduled jobs of `jobs` (0 if none is scheduled).
    pub fn span_of(&self, jobs: &[Job]) -> Rational {
        jobs.iter()
            .filter_map(|j| self.starts.get(&j.id).map(|s| s + &j.p))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Which capacity is exceeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Machine,
    Resource,
}

/// First time at which a capacity is exceeded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(with = "serde_q")]
    pub time: Rational,
    pub kind: ViolationKind,
    pub demand: u64,
    pub capacity: u64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Machine => "machine",
            ViolationKind::Resource => "resource",
        };
        write!(
            f,
            "{what} capacity exceeded at t={}: demand {} > {}",
            Short(&self.time),
            self.demand,
            self.capacity
        )
    }
}

/// Result of [`verify_schedule`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub feasible: bool,
    #[serde(with = "serde_q")]
    pub makespan: Rational,
    pub first_violation: Option<Violation>,
}

/// Completion time of the last job; 0 for an empty instance.
pub fn makespan(inst: &Instance, sched: &Schedule) -> Result<Rational, ModelError> {
    let mut best = Rational::zero();
    for j in &inst.jobs {
        let s = sched.starts.get(&j.id).ok_or(ModelError::IncompleteSchedule(j.id))?;
        let e = s + &j.p;
        if e > best {
            best = e;
        }
    }
    Ok(best)
}

/// Checks the machine and resource conditions at every start and end point.
pub fn verify_schedule(inst: &Instance, sched: &Schedule) -> Result<VerificationReport, ModelError> {
    for id in sched.starts.keys() {
        if inst.job(*id).is_none() {
            return Err(ModelError::UnknownJob(*id));
        }
    }
    let mut intervals = Vec::with_capacity(inst.n());
    for j in &inst.jobs {
        let s = sched.starts.get(&j.id).ok_or(ModelError::IncompleteSchedule(j.id))?;
        if s.is_negative() {
            return Err(ModelError::NegativeStart(j.id));
        }
        intervals.push((s.clone(), s + &j.p, j.r));
    }
    let makespan = intervals.iter().map(|(_, e, _)| e.clone()).max().unwrap_or_else(Rational::zero);
    let first_violation = scan_usage(&intervals, inst.m, inst.resource);
    Ok(VerificationReport { feasible: first_violation.is_none(), makespan, first_violation })
}

/// Scans half-open intervals `[start, end)` with resource demand and reports the first
/// time where more than `m` intervals run or their demand exceeds `capacity`.
pub fn scan_usage(intervals: &[(Rational, Rational, u64)], m: u64, capacity: u64) -> Option<Violation> {
    // (time, is_start, r); ends sort before starts at equal times.
    let mut events: Vec<(&Rational, bool, u64)> = Vec::with_capacity(2 * intervals.len());
    for (s, e, r) in intervals {
        events.push((s, true, *r));
        events.push((e, false, *r));
    }
    events.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
    let mut machines: u64 = 0;
    let mut resource: u64 = 0;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            let (_, start, r) = events[i];
            if start {
                machines += 1;
                resource += r;
            } else {
                machines -= 1;
                resource -= r;
            }
            i += 1;
        }
        if machines > m {
            return Some(Violation { time: t.clone(), kind: ViolationKind::Machine, demand: machines, capacity: m });
        }
        if resource > capacity {
            return Some(Violation {
                time: t.clone(),
                kind: ViolationKind::Resource,
                demand: resource,
                capacity,
            });
        }
    }
    None
}

/// Verifies only the jobs that appear in `sched` (a partial schedule).
pub fn verify_partial(inst: &Instance, sched: &Schedule) -> Result<VerificationReport, ModelError> {
    let ids: BTreeSet<JobId> = sched.starts.keys().copied().collect();
    for id in &ids {
        if inst.job(*id).is_none() {
            return Err(ModelError::UnknownJob(*id));
        }
    }
    verify_schedule(&inst.restrict(&ids), sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn inst(m: u64, r: u64, jobs: &[(i64, u64)]) -> Instance {
        let pairs: Vec<_> = jobs.iter().map(|(p, r)| (int(*p), *r)).collect();
        Instance::from_pairs(m, r, &pairs).unwrap()
    }

    fn sched(starts: &[(JobId, Rational)]) -> Schedule {
        Schedule { starts: starts.iter().cloned().collect() }
    }

    #[test]
    fn single_job_feasible() {
        let i = inst(1, 1, &[(2, 1)]);
        let rep = verify_schedule(&i, &sched(&[(0, int(0))])).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.makespan, int(2));
    }

    #[test]
    fn resource_violation_reported() {
        let i = inst(2, 1, &[(1, 1), (1, 1)]);
        let rep = verify_schedule(&i, &sched(&[(0, int(0)), (1, int(0))])).unwrap();
        let v = rep.first_violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Resource);
        assert_eq!((v.time, v.demand, v.capacity), (int(0), 2, 1));
        assert!(!rep.feasible);
    }

    #[test]
    fn machine_violation_reported() {
        let i = inst(1, 2, &[(1, 1), (1, 1)]);
        let rep = verify_schedule(&i, &sched(&[(0, int(0)), (1, int(0))])).unwrap();
        let v = rep.first_violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Machine);
        assert_eq!((v.demand, v.capacity), (2, 1));
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        let i = inst(1, 1, &[(1, 1), (1, 1)]);
        let rep = verify_schedule(&i, &sched(&[(0, int(0)), (1, int(1))])).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.makespan, int(2));
    }

    #[test]
    fn missing_and_unknown_ids() {
        let i = inst(1, 1, &[(1, 1)]);
        assert_eq!(verify_schedule(&i, &Schedule::new()), Err(ModelError::IncompleteSchedule(0)));
        assert_eq!(
            verify_schedule(&i, &sched(&[(0, int(0)), (9, int(0))])),
            Err(ModelError::UnknownJob(9))
        );
    }

    #[test]
    fn makespan_examples() {
        let empty = inst(1, 1, &[]);
        assert_eq!(makespan(&empty, &Schedule::new()).unwrap(), int(0));
        let one = inst(1, 1, &[(3, 0)]);
        assert_eq!(makespan(&one, &sched(&[(0, int(2))])).unwrap(), int(5));
        let two = inst(1, 1, &[(1, 0), (2, 0)]);
        assert_eq!(makespan(&two, &sched(&[(0, int(0)), (1, int(1))])).unwrap(), int(3));
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound_t(&inst(2, 10, &[(4, 5), (4, 5)])), int(4));
        assert_eq!(lower_bound_t(&inst(3, 10, &[(5, 10)])), int(5));
        assert_eq!(lower_bound_t(&inst(2, 3, &[(2, 2), (2, 2), (2, 1)])), rat(10, 3));
        assert_eq!(lower_bound_t(&inst(2, 3, &[])), int(0));
    }

    #[test]
    fn area_examples() {
        assert_eq!(area(&[]), int(0));
        assert_eq!(area(&inst(1, 5, &[(2, 3)]).jobs), int(6));
        assert_eq!(area(&inst(1, 5, &[(2, 3), (1, 4)]).jobs), int(10));
    }

    #[test]
    fn rejects_bad_instances() {
        assert_eq!(Instance::new(0, 1, vec![]), Err(ModelError::NoMachines));
        assert_eq!(Instance::new(1, 0, vec![]), Err(ModelError::NoResource));
        assert_eq!(
            Instance::new(1, 2, vec![Job::new(3, int(1), 5)]),
            Err(ModelError::ResourceTooLarge { id: 3, r: 5, capacity: 2 })
        );
        assert_eq!(
            Instance::new(1, 2, vec![Job::new(3, int(1), 1), Job::new(3, int(2), 1)]),
            Err(ModelError::DuplicateId(3))
        );
        assert_eq!(Instance::new(1, 2, vec![Job::new(1, int(0), 1)]), Err(ModelError::NonPositiveTime(1)));
    }

    #[test]
    fn json_round_trip() {
        let i = Instance::new(2, 5, vec![Job::new(7, rat(3, 2), 4), Job::new(1, int(2), 0)]).unwrap();
        let text = serde_json::to_string(&i).unwrap();
        assert!(text.contains("\"3/2\""));
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, i);
        let s = sched(&[(7, rat(1, 3)), (1, int(0))]);
        let back: Schedule = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_integer_shorthand() {
        let i: Instance =
            serde_json::from_str(r#"{"m":1,"R":3,"jobs":[{"id":0,"p":2,"r":1},{"id":1,"p":"5/2","r":3}]}"#).unwrap();
        assert_eq!(i.jobs[0].p, int(2));
        assert_eq!(i.jobs[1].p, rat(5, 2));
        let s: Schedule = serde_json::from_str(r#"{"starts":{"0":0,"1":"2/1"}}"#).unwrap();
        assert_eq!(s.starts[&1], int(2));
        assert!(serde_json::from_str::<Instance>(r#"{"m":1,"R":3,"jobs":[{"id":0,"p":0.5,"r":1}]}"#).is_err());
        assert!(serde_json::from_str::<Instance>(r#"{"m":1,"R":3,"jobs":[{"id":0,"p":1,"r":4}]}"#).is_err());
    }
}
