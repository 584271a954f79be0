//! Geometric grouping of short-job resource requirements.

use crate::model::{area, total_p, Job, JobId};
use crate::rational::{inverse_integer, uint, Rational};
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;

/// Identifies a group: `class` is `Some(i)` for requirements in `(R/2^i, R/2^(i-1)]` and
/// `None` for the remainder, `index` counts groups from the bottom of the class stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroupKey {
    pub class: Option<u32>,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Group {
    /// Largest requirement in the group; every member is scheduled with it.
    pub rounded_r: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub total_p: Rational,
    pub members: Vec<JobId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SmallGroups {
    /// `ceil(log2 m)`, the number of dyadic classes.
    pub class_count: u32,
    pub groups: BTreeMap<GroupKey, Group>,
    pub assignment: BTreeMap<JobId, GroupKey>,
    /// Total processing time per class.
    #[serde(skip)]
    pub class_p: BTreeMap<Option<u32>, Rational>,
}

fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// Dyadic class of requirement `r`: the smallest `i >= 1` with `r > R / 2^i`, or `None`
/// past the last class.
pub fn class_of(r: u64, resource: u64, class_count: u32) -> Option<u32> {
    (1..=class_count).find(|&i| u128::from(r) << i > u128::from(resource))
}

/// Groups the jobs of each class by stacking them in increasing order of requirement and
/// cutting the stack at multiples of `eps` times its height, moving each cut up to the end
/// of the job it crosses.
pub fn geometric_group(jobs: &[Job], eps: &Rational, m: u64, resource: u64) -> SmallGroups {
    let k = inverse_integer(eps).expect("1/eps is an integer") as u32;
    let class_count = ceil_log2(m);
    let mut by_class: BTreeMap<Option<u32>, Vec<&Job>> = BTreeMap::new();
    for j in jobs {
        by_class.entry(class_of(j.r, resource, class_count)).or_default().push(j);
    }
    let mut out = SmallGroups { class_count, ..SmallGroups::default() };
    for (class, mut members) in by_class {
        members.sort_by(|a, b| a.r.cmp(&b.r).then(a.id.cmp(&b.id)));
        let height: Rational = members.iter().map(|j| j.p.clone()).sum();
        let cut = eps * &height;
        let mut top = Rational::zero();
        let mut index = 0u32;
        for j in members {
            let key = GroupKey { class, index };
            let g = out.groups.entry(key).or_insert_with(|| Group {
                rounded_r: 0,
                total_p: Rational::zero(),
                members: Vec::new(),
            });
            g.rounded_r = g.rounded_r.max(j.r);
            g.total_p += &j.p;
            g.members.push(j.id);
            out.assignment.insert(j.id, key);
            top += &j.p;
            while index + 1 < k && uint(u64::from(index + 1)) * &cut <= top {
                index += 1;
            }
        }
        out.class_p.insert(class, height);
    }
    out
}

/// Length of the extra schedule that absorbs the grouping loss, checked against
/// `2 eps area(J)/R + eps p(J)/m` for the full job set `all`.
pub fn bound_grouping_overflow(groups: &SmallGroups, eps: &Rational, all: &[Job], m: u64, resource: u64) -> Rational {
    let mut total = Rational::zero();
    for (class, p) in &groups.class_p {
        total += match class {
            Some(i) => eps * p / uint(1u64 << (i - 1)),
            None => eps * p / uint(m),
        };
    }
    let bound = uint(2) * eps * area(all) / uint(resource) + eps * total_p(all) / uint(m);
    assert!(total <= bound, "grouping overflow {total} exceeds {bound}");
    total
}
