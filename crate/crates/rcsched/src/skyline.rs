//! Piecewise-constant machine/resource usage over time, with earliest-fit search.
//!
//! Used by the list scheduler, the oracle and the grid placement search. Generic over the
//! time type so the hot paths can run on scaled integers.

use num_traits::Zero;
use std::ops::Add;

/// Usage step function. `pts[i] = (t, machines, resource)` holds on `[t, pts[i+1].t)`;
/// the last step extends to infinity and always has zero usage.
#[derive(Clone, Debug)]
pub struct Skyline<T> {
    pts: Vec<(T, u64, u64)>,
}

impl<T> Default for Skyline<T>
where
    T: Clone + Ord + Zero,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    fn default() -> Self {
        Self::new()
    }
}

impl<T> Skyline<T>
where
    T: Clone + Ord + Zero,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    pub fn new() -> Self {
        Skyline { pts: vec![(T::zero(), 0, 0)] }
    }

    fn index_of(&self, t: &T) -> usize {
        // last i with pts[i].0 <= t
        self.pts.partition_point(|(s, _, _)| s <= t).saturating_sub(1)
    }

    fn split_at(&mut self, t: &T) -> usize {
        let i = self.index_of(t);
        if &self.pts[i].0 == t {
            return i;
        }
        let (_, m, r) = self.pts[i];
        self.pts.insert(i + 1, (t.clone(), m, r));
        i + 1
    }

    /// Adds one job occupying `[start, end)` with resource `r`.
    pub fn add(&mut self, start: &T, end: &T, r: u64) {
        if start >= end {
            return;
        }
        let a = self.split_at(start);
        let b = self.split_at(end);
        for p in &mut self.pts[a..b] {
            p.1 += 1;
            p.2 += r;
        }
    }

    /// Usage at time `t`.
    pub fn usage_at(&self, t: &T) -> (u64, u64) {
        let (_, m, r) = self.pts[self.index_of(t)];
        (m, r)
    }

    /// Maximum machine and resource usage over `[start, end)` (taken independently).
    pub fn max_usage(&self, start: &T, end: &T) -> (u64, u64) {
        let mut i = self.index_of(start);
        let (mut mm, mut mr) = (0, 0);
        while i < self.pts.len() && &self.pts[i].0 < end {
            mm = mm.max(self.pts[i].1);
            mr = mr.max(self.pts[i].2);
            i += 1;
        }
        (mm, mr)
    }

    /// Whether a job with resource `r` fits on `[start, end)` under the capacities.
    pub fn fits(&self, start: &T, end: &T, r: u64, m_cap: u64, r_cap: u64) -> bool {
        let mut i = self.index_of(start);
        while i < self.pts.len() && &self.pts[i].0 < end {
            if self.pts[i].1 + 1 > m_cap || self.pts[i].2 + r > r_cap {
                return false;
            }
            i += 1;
        }
        true
    }

    /// Earliest `t >= from` (after alignment) at which a job of length `p` and resource `r`
    /// fits. `align` must map a time to the smallest admissible time not below it.
    /// Returns `None` when the job can never fit.
    pub fn earliest_fit(
        &self,
        p: &T,
        r: u64,
        m_cap: u64,
        r_cap: u64,
        from: &T,
        align: impl Fn(&T) -> T,
    ) -> Option<T> {
        if m_cap == 0 || r > r_cap {
            return None;
        }
        let mut t = align(from);
        loop {
            let end = &t + p;
            let mut i = self.index_of(&t);
            let mut blocked_until = None;
            while i < self.pts.len() && self.pts[i].0 < end {
                if self.pts[i].1 + 1 > m_cap || self.pts[i].2 + r > r_cap {
                    // The last step has zero usage, so a blocking step always has a successor.
                    blocked_until = Some(self.pts[i + 1].0.clone());
                    break;
                }
                i += 1;
            }
            match blocked_until {
                None => return Some(t),
                Some(next) => t = align(&next),
            }
        }
    }

    /// Time after which usage is zero.
    pub fn horizon(&self) -> T {
        self.pts.last().map(|p| p.0.clone()).unwrap_or_else(T::zero)
    }

    /// Breakpoints `(time, machines, resource)`.
    pub fn steps(&self) -> &[(T, u64, u64)] {
        &self.pts
    }
}
